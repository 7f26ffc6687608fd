// Copyright 2026 The qlgf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <unsupported/Eigen/NonLinearOptimization>

#include "qlgf/errors.hpp"

namespace qlgf {

/// Rabi flip probability for detuning delta, Rabi rate rabi and probe time t:
///   P = rabi^2 / (rabi^2 + delta^2) sin^2(sqrt(rabi^2 + delta^2) t / 2)
inline double rabi_flip_probability(double delta, double rabi, double t) {
    const double w2 = rabi * rabi + delta * delta;
    if (w2 == 0.0) return 0.0;
    const double s = std::sin(0.5 * std::sqrt(w2) * t);
    return rabi * rabi / w2 * s * s;
}

/// Measured resonance scan. Detunings are relative to `center_guess`, the
/// absolute drive frequency of the zero point. `counts[i]` are bright
/// outcomes out of `shots` (fractional in expected-value mode). The expected
/// bright fraction is baseline + amplitude * P(center_guess + d_i - omega0).
struct LineshapeScan {
    double center_guess = 0.0;  // rad/s
    std::vector<double> detunings;
    int shots = 0;
    std::vector<double> counts;
    double rabi = 0.0;        // rad/s
    double probe_time = 0.0;  // s
    double baseline = 0.0;    // known false-positive fraction of the discriminator
    double t_start = 0.0, t_end = 0.0, t_mean = 0.0;

    void validate() const {
        if (shots <= 0) throw DomainError("lineshape scan: shots must be positive");
        if (counts.size() != detunings.size()) throw DomainError("lineshape scan: counts and detunings differ in size");
        for (double c : counts)
            if (c < 0.0 || c > shots) throw DomainError("lineshape scan: counts must lie in [0, shots]");
    }
};

struct ResonanceFit {
    double omega_hat = 0.0;  // rad/s
    double sigma = 0.0;      // rad/s
    double amplitude = 0.0;
    double amplitude_sigma = 0.0;
    double chi2 = 0.0;
    int ndf = 0;
};

namespace detail {

/// Weighted residuals of the lineshape model with parameters
/// x = (center offset / rabi, amplitude). Weights are held fixed during one
/// least-squares pass.
struct LineshapeResiduals {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const LineshapeScan *scan = nullptr;
    Eigen::VectorXd inv_sigma;

    int inputs() const { return 2; }
    int values() const { return static_cast<int>(scan->detunings.size()); }

    double model(const Eigen::VectorXd &x, std::size_t i) const {
        const double delta = scan->detunings[i] - x(0) * scan->rabi;
        return scan->baseline + x(1) * rabi_flip_probability(delta, scan->rabi, scan->probe_time);
    }

    int operator()(const Eigen::VectorXd &x, Eigen::VectorXd &fvec) const {
        for (std::size_t i = 0; i < scan->detunings.size(); ++i) {
            const double y = scan->counts[i] / scan->shots;
            fvec(static_cast<Eigen::Index>(i)) = (y - model(x, i)) * inv_sigma(static_cast<Eigen::Index>(i));
        }
        return 0;
    }

    int df(const Eigen::VectorXd &x, Eigen::MatrixXd &fjac) const {
        const double h = 1e-7;
        for (std::size_t i = 0; i < scan->detunings.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double delta = scan->detunings[i] - x(0) * scan->rabi;
            const double dp = (rabi_flip_probability(delta - h * scan->rabi, scan->rabi, scan->probe_time) -
                               rabi_flip_probability(delta + h * scan->rabi, scan->rabi, scan->probe_time)) /
                              (2.0 * h);
            fjac(r, 0) = -x(1) * dp * inv_sigma(r);
            fjac(r, 1) = -rabi_flip_probability(delta, scan->rabi, scan->probe_time) * inv_sigma(r);
        }
        return 0;
    }

    /// Binomial standard deviation of the bright fraction, with the
    /// probability clipped half a count away from 0 and 1.
    void update_weights(const Eigen::VectorXd &x) {
        const double clip = 0.5 / scan->shots;
        inv_sigma.resize(values());
        for (std::size_t i = 0; i < scan->detunings.size(); ++i) {
            const double p = std::clamp(model(x, i), clip, 1.0 - clip);
            inv_sigma(static_cast<Eigen::Index>(i)) = 1.0 / std::sqrt(p * (1.0 - p) / scan->shots);
        }
    }
};

}  // namespace detail

/// Fits whose chi-square has a smaller upper-tail probability are rejected.
inline constexpr double kMinFitProbability = 1e-6;
/// Minimum significance of the fitted line amplitude.
inline constexpr double kMinAmplitudeSignificance = 5.0;

/// Weighted least-squares fit of the Rabi lineshape with free center and
/// amplitude. Weights follow the binomial variance of the current model and
/// are refreshed between passes (iteratively reweighted least squares);
/// sigma comes from the inverse normal matrix at the solution. A center
/// outside the scanned span or a chi-square incompatible with the model
/// (for example a line smeared by drift) is an estimation error.
inline ResonanceFit fit_resonance(const LineshapeScan &scan, std::optional<double> initial_center = std::nullopt) {
    scan.validate();
    if (scan.detunings.size() < 5) throw DomainError("fit_resonance: need at least 5 scan points");
    if (!(scan.rabi > 0.0) || !(scan.probe_time > 0.0)) throw DomainError("fit_resonance: rabi and probe_time must be positive");

    Eigen::VectorXd x(2);
    if (initial_center) {
        x(0) = (*initial_center - scan.center_guess) / scan.rabi;
    } else {
        const auto it = std::max_element(scan.counts.begin(), scan.counts.end());
        x(0) = scan.detunings[static_cast<std::size_t>(it - scan.counts.begin())] / scan.rabi;
    }
    const double peak = *std::max_element(scan.counts.begin(), scan.counts.end()) / scan.shots;
    x(1) = std::max(peak - scan.baseline, 0.05);

    detail::LineshapeResiduals f;
    f.scan = &scan;
    Eigen::VectorXd prev = x;
    for (int pass = 0; pass < 8; ++pass) {
        f.update_weights(x);
        Eigen::LevenbergMarquardt<detail::LineshapeResiduals> lm(f);
        lm.parameters.xtol = 1e-14;
        lm.parameters.ftol = 1e-14;
        lm.parameters.maxfev = 2000;
        const auto status = lm.minimize(x);
        if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
            status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation || !x.allFinite()) {
            Eigen::VectorXd r(f.values());
            f(x, r);
            throw EstimationError("fit_resonance did not converge",
                                  std::vector<double>(r.data(), r.data() + r.size()));
        }
        if ((x - prev).cwiseAbs().maxCoeff() < 1e-13) break;
        prev = x;
    }
    f.update_weights(x);

    Eigen::VectorXd r(f.values());
    f(x, r);
    Eigen::MatrixXd J(f.values(), 2);
    f.df(x, J);
    const Eigen::Matrix2d normal = J.transpose() * J;
    const Eigen::FullPivLU<Eigen::Matrix2d> lu(normal);
    if (!lu.isInvertible() || !(x(1) > 0.0))
        throw EstimationError("fit_resonance: singular fit (no resolvable line)",
                              std::vector<double>(r.data(), r.data() + r.size()));
    const Eigen::Matrix2d cov = lu.inverse();

    ResonanceFit fit;
    fit.omega_hat = scan.center_guess + x(0) * scan.rabi;
    fit.sigma = std::sqrt(cov(0, 0)) * scan.rabi;
    fit.amplitude = x(1);
    fit.amplitude_sigma = std::sqrt(cov(1, 1));
    fit.chi2 = r.squaredNorm();
    fit.ndf = f.values() - 2;

    if (fit.amplitude < kMinAmplitudeSignificance * fit.amplitude_sigma)
        throw EstimationError("fit_resonance: no significant line in the scan",
                              std::vector<double>(r.data(), r.data() + r.size()));
    const auto [lo, hi] = std::minmax_element(scan.detunings.begin(), scan.detunings.end());
    if (x(0) * scan.rabi < *lo || x(0) * scan.rabi > *hi)
        throw EstimationError("fit_resonance: fitted center lies outside the scanned span",
                              std::vector<double>(r.data(), r.data() + r.size()));
    if (fit.chi2 > 0.0 && boost::math::gamma_q(0.5 * fit.ndf, 0.5 * fit.chi2) < kMinFitProbability)
        throw EstimationError("fit_resonance: lineshape model inconsistent with the data (chi2 " +
                                  std::to_string(fit.chi2) + " for " + std::to_string(fit.ndf) + " dof)",
                              std::vector<double>(r.data(), r.data() + r.size()));
    return fit;
}

}  // namespace qlgf
