#include "fsa/kernels.hpp"

namespace fsa::kernels {

#if defined(FSA_HAVE_AVX2_TU)
const Ops& avx2_ops();
#endif
#if defined(FSA_HAVE_NEON_TU)
const Ops& neon_ops();
#endif

namespace {

const Ops* table_for(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return &scalar_ops();
#if defined(FSA_HAVE_AVX2_TU)
        case Isa::avx2:
            return &avx2_ops();
#endif
#if defined(FSA_HAVE_NEON_TU)
        case Isa::neon:
            return &neon_ops();
#endif
        default:
            return nullptr;
    }
}

struct Selection {
    Isa isa;
    const Ops* ops;
};

Selection& selection() {
    static Selection s = {detect_best(), table_for(detect_best())};
    return s;
}

}  // namespace

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "?";
}

Isa detect_best() {
#if defined(FSA_HAVE_AVX2_TU)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
#if defined(FSA_HAVE_NEON_TU)
    return Isa::neon;
#endif
    return Isa::scalar;
}

const Ops& active() { return *selection().ops; }

Isa active_isa() { return selection().isa; }

bool select(Isa isa) {
    if (isa != Isa::scalar && isa != detect_best()) {
        // only the detected best non-scalar ISA can be pinned
        if (table_for(isa) == nullptr) return false;
#if defined(FSA_HAVE_AVX2_TU)
        if (isa == Isa::avx2 && !(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")))
            return false;
#endif
    }
    const Ops* t = table_for(isa);
    if (!t) return false;
    selection() = {isa, t};
    return true;
}

}  // namespace fsa::kernels
