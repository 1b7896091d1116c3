#pragma once

#include <string>
#include <vector>

#include "sumlab/ordering/ordering.hpp"
#include "sumlab/staircase/staircase.hpp"

namespace sumlab {

struct TracePanel {
    std::string title;
    double reference_mm = 0.0;
    const StaircaseState* state = nullptr;
};

/// Comparison level per trial with reversals marked, one panel per staircase.
/// The CSV trace export is the data contract; this image is a convenience.
std::string render_staircase_svg(const std::vector<TracePanel>& panels);

/// Labels A..I placed on a horizontal [0, 1] continuum.
std::string render_ordering_svg(const std::vector<ContinuumPlacement>& placements);

}  // namespace sumlab
