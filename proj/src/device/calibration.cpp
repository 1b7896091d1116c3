#include "sumlab/device/calibration.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sumlab/errors.hpp"

namespace sumlab {

CalibrationReport calibrate_channel(SimulatedDevice& device, ChannelId channel, const CalibrationOptions& options) {
    if (!device.idle()) throw CalibrationError("device is not idle");
    if (!(options.sweep_step_mm > 0.0) || options.samples_per_point < 1) {
        throw ConfigError("calibration", "sweep step and samples per point must be positive");
    }
    const auto& params = device.params();
    const double floor = 2.0 * params.sensor.resolution_n;
    const double ceiling = params.sensor.range_n - 2.0 * params.sensor.resolution_n;

    std::vector<double> xs;
    std::vector<double> fs;
    const int steps = static_cast<int>(std::floor(params.actuator.stroke_mm / options.sweep_step_mm + 1e-9));
    for (int i = 0; i <= steps; ++i) {
        device.set_target(channel, i * options.sweep_step_mm);
        device.settle(0.005, options.max_settle_ms);
        double sum = 0.0;
        for (int s = 0; s < options.samples_per_point; ++s) {
            sum += device.read_force(channel).force_n;
            device.tick();
        }
        const double mean = sum / options.samples_per_point;
        if (mean > floor && mean < ceiling) {
            xs.push_back(device.actuator(channel).position_mm);
            fs.push_back(mean);
        }
    }
    device.set_target(channel, 0.0);
    device.settle(0.005, options.max_settle_ms);

    if (xs.size() < 3) throw CalibrationError("too few points in contact and below saturation");

    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = xs[static_cast<std::size_t>(i)];
        a(i, 1) = 1.0;
        f(i) = fs[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(f);
    if (!(coef(0) > 0.0)) throw CalibrationError("fitted stiffness is not positive");

    CalibrationReport report;
    report.channel = channel;
    report.stiffness_n_per_mm = coef(0);
    report.zero_offset_mm = -coef(1) / coef(0);
    report.residual_rms_n = std::sqrt((a * coef - f).squaredNorm() / static_cast<double>(n));
    report.points = static_cast<int>(n);
    device.store_calibration(report);
    return report;
}

}  // namespace sumlab
