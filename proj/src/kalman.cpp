#include "banktweak/kalman.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

namespace banktweak {

namespace {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat8 = Eigen::Matrix<double, 8, 8>;

Vec4 box_vector(const BBox& z) { return Vec4{z.cx, z.cy, z.w, z.h}; }

}  // namespace

KalmanFilter::KalmanFilter(double std_weight_position, double std_weight_velocity)
    : std_pos_(std_weight_position), std_vel_(std_weight_velocity) {
    motion_ = Mat8::Identity();
    for (int i = 0; i < 4; ++i) motion_(i, 4 + i) = 1.0;  // dt = 1
    observation_ = Eigen::Matrix<double, 4, 8>::Zero();
    for (int i = 0; i < 4; ++i) observation_(i, i) = 1.0;
}

Vec4 KalmanFilter::measurement_std(double h) const {
    const double p = std_pos_ * h;
    return Vec4{p, p, p, p};
}

KalmanState KalmanFilter::initiate(const BBox& z) const {
    if (!z.valid()) throw std::invalid_argument("kalman: invalid measurement box");
    KalmanState s;
    s.mean.head<4>() = box_vector(z);
    s.mean.tail<4>().setZero();
    Vec8 std;
    const double p = 2.0 * std_pos_ * z.h;
    const double v = 10.0 * std_vel_ * z.h;
    std << p, p, p, p, v, v, v, v;
    s.covariance = std.array().square().matrix().asDiagonal();
    return s;
}

KalmanState KalmanFilter::predict(const KalmanState& s) const {
    const double h = s.mean(3);
    Vec8 std;
    const double p = std_pos_ * h;
    const double v = std_vel_ * h;
    std << p, p, p, p, v, v, v, v;
    const Mat8 process_noise = std.array().square().matrix().asDiagonal();

    KalmanState out;
    out.mean = motion_ * s.mean;
    out.covariance = motion_ * s.covariance * motion_.transpose() + process_noise;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

void KalmanFilter::project(const KalmanState& s, Vec4& z_mean, Mat4& z_cov) const {
    const Vec4 std = measurement_std(s.mean(3));
    const Mat4 measurement_noise = std.array().square().matrix().asDiagonal();
    z_mean = observation_ * s.mean;
    z_cov = observation_ * s.covariance * observation_.transpose() + measurement_noise;
}

KalmanState KalmanFilter::update(const KalmanState& s, const BBox& z) const {
    if (!z.valid()) throw std::invalid_argument("kalman: invalid measurement box");
    Vec4 z_mean;
    Mat4 z_cov;
    project(s, z_mean, z_cov);

    Eigen::LLT<Mat4> llt(z_cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("kalman: innovation covariance not invertible");

    const Eigen::Matrix<double, 8, 4> gain =
        llt.solve(observation_ * s.covariance.transpose()).transpose();
    const Vec4 innovation = box_vector(z) - z_mean;

    KalmanState out;
    out.mean = s.mean + gain * innovation;
    out.covariance = s.covariance - gain * z_cov * gain.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

double KalmanFilter::mahalanobis_sq(const KalmanState& s, const BBox& z) const {
    if (!z.valid()) throw std::invalid_argument("kalman: invalid measurement box");
    Vec4 z_mean;
    Mat4 z_cov;
    project(s, z_mean, z_cov);

    Eigen::LLT<Mat4> llt(z_cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("kalman: projected covariance not invertible");

    const Vec4 residual = box_vector(z) - z_mean;
    const Vec4 whitened = llt.matrixL().solve(residual);
    return whitened.squaredNorm();
}

}  // namespace banktweak
