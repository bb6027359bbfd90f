#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sldf/image.hpp"
#include "sldf/optics.hpp"
#include "sldf/stack.hpp"

namespace sldf {

enum class apodization_kind { triangle, raised_cosine, none };
enum class parameter_source { manifest, estimate };

struct ReconParams {
    double wiener_w = 0.05;                                   // regularization, > 0
    apodization_kind apodization = apodization_kind::triangle;
    parameter_source source = parameter_source::manifest;
    int upsample_factor = 2;                                  // integer >= 1
};

void validate_recon_params(const ReconParams& params);

/// 2-norm condition number of the 3x3 phase mixing matrix with rows
/// [1, e^{i phi_k}, e^{-i phi_k}]. Equally spaced phases give 1; repeated
/// phases push it to infinity.
double mixing_condition(const std::array<double, 3>& phases_deg);

struct SeparatedComponents {
    Spectrum c0; // object passband, unshifted
    Spectrum cp; // coefficient of e^{+i phi}: object spectrum displaced by +p
    Spectrum cm; // coefficient of e^{-i phi}: object spectrum displaced by -p
};

/// Solves, per frequency bin, the 3x3 system
///   D_k = C0 + (m/2) e^{+i phi_k} C+ + (m/2) e^{-i phi_k} C-
/// for the three components. Fails with errc::singular_phases when the phase
/// matrix condition number exceeds 1e8 or the modulation depth is zero.
SeparatedComponents separate_components(const std::array<Spectrum, 3>& frames,
                                        const std::array<double, 3>& phases_deg,
                                        double modulation);

struct FringeEstimate {
    std::array<double, 2> p_vector{0.0, 0.0}; // cycles/um
    double phase0_rad = 0.0;                  // pattern phase offset beyond the nominal phases
    double modulation = 0.0;                  // estimated modulation depth
    double peak_ratio = 0.0;                  // correlation peak over background
};

/// Recovers the fringe frequency, starting phase, and modulation depth from
/// components separated with unit modulation. The frequency is the argmax of
/// the C0 x C+ cross-correlation (searched within +-3 bins of the hint when
/// given, else globally), refined by a 2-D quadratic fit; phase and modulation
/// come from a complex regression of the shifted C+ against C0 over the OTF
/// overlap. Fails with errc::no_peak when the peak-to-background ratio is
/// below 3.
FringeEstimate estimate_fringe_params(const Spectrum& c0, const Spectrum& cp, const OpticsConfig& cfg,
                                      const std::optional<std::array<double, 2>>& p_hint);

/// Translates spectral content by `shift` (cycles/um) on a grid upsampled by
/// an integer factor: centered zero pad, inverse transform, multiplication by
/// exp(+2 pi i shift . r), forward transform. Energy is preserved. Fails with
/// errc::support_overflow when |shift| + support_radius exceeds the upsampled
/// Nyquist.
Spectrum shift_component(const Spectrum& component, std::array<double, 2> shift, int upsample_factor,
                         double support_radius = 0.0);

/// One measurement of the object spectrum: component already moved to its
/// true position, plus the displacement its OTF was dragged through.
struct ShiftedComponent {
    Spectrum spectrum;
    std::array<double, 2> shift{0.0, 0.0};
};

/// Generalized Wiener synthesis across all components:
///   S(f) = sum_d conj(OTF_d(f)) C_d(f) / (sum_d |OTF_d(f)|^2 + w^2),
/// with OTF_d the detection OTF translated by the component's shift, followed
/// by apodization to the extended cutoff (detection cutoff + max |shift|).
Spectrum wiener_combine(const std::vector<ShiftedComponent>& components, const OpticsConfig& cfg,
                        const ReconParams& params);

struct ReconResult {
    Image enhanced;
    std::vector<FringeEstimate> per_orientation;
};

/// Full pipeline: per-orientation separation, (optional) parameter
/// estimation, sub-pixel shifting to an upsampled grid, Wiener synthesis,
/// inverse transform, and a zero clamp on the final image. Requires exactly
/// three phases per orientation. A zero-modulation manifest degenerates to
/// plain Wiener deconvolution of the phase-averaged image.
ReconResult reconstruct(const RawStack& stack, const ReconParams& params);

/// Phase-averaged (conventional dark-field) image of a stack.
Image conventional_image(const RawStack& stack);

/// Single-OTF Wiener deconvolution, clamped at zero.
Image wiener_deconvolve(const Image& img, const OpticsConfig& cfg, double wiener_w);

} // namespace sldf
