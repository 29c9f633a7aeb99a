#pragma once

#include <Eigen/Dense>

#include "banktweak/geometry.hpp"

namespace banktweak {

// Constant-velocity motion state over (cx, cy, w, h) plus velocities.
struct KalmanState {
    Eigen::Matrix<double, 8, 1> mean = Eigen::Matrix<double, 8, 1>::Zero();
    Eigen::Matrix<double, 8, 8> covariance = Eigen::Matrix<double, 8, 8>::Identity();
};

// Chi-square 0.95 quantile with 4 degrees of freedom; the base gating
// threshold on squared Mahalanobis distance for a 4-dimensional
// measurement.
inline constexpr double kGateChi2Quantile95 = 9.487729036781154;

// Standard constant-velocity filter with noise scales proportional to the
// box height, the usual convention for box tracking.
class KalmanFilter {
public:
    explicit KalmanFilter(double std_weight_position = 1.0 / 20.0,
                          double std_weight_velocity = 1.0 / 160.0);

    KalmanState initiate(const BBox& z) const;
    KalmanState predict(const KalmanState& s) const;

    // Measurement update; throws if the innovation covariance is singular.
    KalmanState update(const KalmanState& s, const BBox& z) const;

    // Squared Mahalanobis distance of z from the predicted measurement
    // distribution; throws if the projected covariance is singular.
    double mahalanobis_sq(const KalmanState& s, const BBox& z) const;

    static BBox state_box(const KalmanState& s) {
        return BBox{s.mean(0), s.mean(1), s.mean(2), s.mean(3)};
    }

private:
    Eigen::Matrix<double, 4, 1> measurement_std(double h) const;
    void project(const KalmanState& s, Eigen::Matrix<double, 4, 1>& z_mean,
                 Eigen::Matrix<double, 4, 4>& z_cov) const;

    double std_pos_;
    double std_vel_;
    Eigen::Matrix<double, 8, 8> motion_;
    Eigen::Matrix<double, 4, 8> observation_;
};

}  // namespace banktweak
