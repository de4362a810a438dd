#include "uwqa/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace uwqa::kernels {

const KernelSet& active()
{
    static const KernelSet& chosen = [] () -> const KernelSet& {
        const char* forced = std::getenv("UWQA_KERNELS");
        if (forced != nullptr && std::string_view(forced) == "scalar")
            return scalar();
        if (const KernelSet* v = avx2())
            return *v;
        return scalar();
    }();
    return chosen;
}

} // namespace uwqa::kernels
