#include "sldf/sectioning.hpp"

#include <algorithm>
#include <cmath>

namespace sldf {

combine_mode combine_mode_from_string(const std::string& name) {
    if (name == "single")
        return combine_mode::single;
    if (name == "mean")
        return combine_mode::mean;
    if (name == "max")
        return combine_mode::max;
    fail(errc::bad_spec, "unknown combine mode '" + name + "' (expected single, mean, or max)");
}

std::string to_string(combine_mode mode) {
    switch (mode) {
        case combine_mode::single: return "single";
        case combine_mode::mean: return "mean";
        case combine_mode::max: return "max";
    }
    return "mean";
}

Image section_three(const Image& f0, const Image& f1, const Image& f2) {
    if (!same_grid(f0, f1) || !same_grid(f0, f2))
        fail(errc::grid_mismatch, "phase frames live on different grids");
    Image out(f0.width, f0.height, f0.pixel_pitch);
    for (std::size_t j = 0; j < out.data.size(); ++j) {
        const double a = f0.data[j] - f1.data[j];
        const double b = f1.data[j] - f2.data[j];
        const double c = f2.data[j] - f0.data[j];
        out.data[j] = std::sqrt(a * a + b * b + c * c);
    }
    return out;
}

Image section_stack(const RawStack& stack, combine_mode mode, std::size_t orientation) {
    validate_stack(stack);
    if (stack.n_phases() != 3)
        fail(errc::partial_protocol, "sectioning needs exactly three phases per orientation, stack has " +
                                         std::to_string(stack.n_phases()));
    if (orientation >= stack.n_orientations())
        fail(errc::out_of_bounds, "orientation index " + std::to_string(orientation) + " out of range");

    if (mode == combine_mode::single)
        return section_three(stack.frame(orientation, 0), stack.frame(orientation, 1),
                             stack.frame(orientation, 2));

    Image out = section_three(stack.frame(0, 0), stack.frame(0, 1), stack.frame(0, 2));
    if (stack.n_orientations() == 1)
        return out;

    for (std::size_t oi = 1; oi < stack.n_orientations(); ++oi) {
        const Image sec = section_three(stack.frame(oi, 0), stack.frame(oi, 1), stack.frame(oi, 2));
        if (mode == combine_mode::max) {
            for (std::size_t j = 0; j < out.data.size(); ++j)
                out.data[j] = std::max(out.data[j], sec.data[j]);
        } else {
            for (std::size_t j = 0; j < out.data.size(); ++j)
                out.data[j] += sec.data[j];
        }
    }
    if (mode == combine_mode::mean) {
        const double scale = 1.0 / static_cast<double>(stack.n_orientations());
        for (double& v : out.data)
            v *= scale;
    }
    return out;
}

} // namespace sldf
