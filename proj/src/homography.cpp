#include "midframe/homography.hpp"

#include <random>

namespace midframe {

namespace {

// Hartley-normalized DLT.
Homography dlt(const std::vector<Eigen::Vector2d>& from,
               const std::vector<Eigen::Vector2d>& to) {
    const size_t n = from.size();
    auto normalize = [](const std::vector<Eigen::Vector2d>& pts, Eigen::Matrix3d& t) {
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (const auto& p : pts) mean += p;
        mean /= static_cast<double>(pts.size());
        double scale = 0;
        for (const auto& p : pts) scale += (p - mean).norm();
        scale /= static_cast<double>(pts.size());
        if (scale < 1e-9) scale = 1.0;
        const double s = std::sqrt(2.0) / scale;
        t.setIdentity();
        t(0, 0) = s;
        t(1, 1) = s;
        t(0, 2) = -s * mean.x();
        t(1, 2) = -s * mean.y();
        return s;
    };
    Eigen::Matrix3d ta, tb;
    normalize(from, ta);
    normalize(to, tb);

    Eigen::MatrixXd m(2 * n, 9);
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p = ta * from[i].homogeneous();
        const Eigen::Vector3d q = tb * to[i].homogeneous();
        m.row(2 * i) << -p.x(), -p.y(), -1, 0, 0, 0, q.x() * p.x(), q.x() * p.y(), q.x();
        m.row(2 * i + 1) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(),
            q.y();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    Eigen::Matrix3d out = tb.inverse() * hn * ta;
    if (std::abs(out(2, 2)) < 1e-12)
        throw DegenerateHomography("fit_homography: vanishing normalization entry");
    return out / out(2, 2);
}

double transfer_error(const Homography& h, const Eigen::Vector2d& p,
                      const Eigen::Vector2d& q) {
    const Eigen::Vector3d hp = h * p.homogeneous();
    if (std::abs(hp.z()) < 1e-12) return 1e9;
    return (hp.hnormalized() - q).norm();
}

}  // namespace

Eigen::Matrix2d affine_block(const Homography& h) {
    return h.block<2, 2>(0, 0) / h(2, 2);
}

Homography fit_homography_points(const std::vector<Eigen::Vector2d>& from,
                                 const std::vector<Eigen::Vector2d>& to,
                                 double max_condition) {
    if (from.size() != to.size() || from.size() < 4)
        throw DegenerateHomography("fit_homography: need at least 4 correspondences");
    Homography h = dlt(from, to);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h);
    const double cond = svd.singularValues()(0) / svd.singularValues()(2);
    if (!std::isfinite(cond) || cond > max_condition)
        throw DegenerateHomography("fit_homography: ill-conditioned fit");
    return h;
}

Homography fit_homography(const Frame& a, const Frame& b, const FlowEstimator& est,
                          const HomographyParams& params) {
    if (!a.same_shape(b))
        throw std::runtime_error("fit_homography: dimension mismatch");

    const FlowField flow = estimate_flow(est, a, b);
    std::vector<Eigen::Vector2d> from, to;
    const double mx = std::max(2.0, 0.03 * a.width);
    const double my = std::max(2.0, 0.03 * a.height);
    for (int gy = 0; gy < params.grid; ++gy)
        for (int gx = 0; gx < params.grid; ++gx) {
            const int x = static_cast<int>(
                std::lround(mx + gx * (a.width - 1 - 2 * mx) / (params.grid - 1)));
            const int y = static_cast<int>(
                std::lround(my + gy * (a.height - 1 - 2 * my) / (params.grid - 1)));
            const double u = flow.u_at(y, x), v = flow.v_at(y, x);
            if (!std::isfinite(u) || !std::isfinite(v)) continue;
            from.emplace_back(x, y);
            to.emplace_back(x + u, y + v);
        }
    if (from.size() < 4)
        throw DegenerateHomography("fit_homography: too few valid correspondences");

    std::mt19937 rng(static_cast<uint32_t>(params.ransac_seed));
    std::uniform_int_distribution<size_t> pick(0, from.size() - 1);
    std::vector<char> best_inliers(from.size(), 0);
    size_t best_count = 0;

    for (int it = 0; it < params.ransac_iterations; ++it) {
        size_t idx[4];
        idx[0] = pick(rng);
        idx[1] = pick(rng);
        idx[2] = pick(rng);
        idx[3] = pick(rng);
        if (idx[0] == idx[1] || idx[0] == idx[2] || idx[0] == idx[3] ||
            idx[1] == idx[2] || idx[1] == idx[3] || idx[2] == idx[3])
            continue;
        std::vector<Eigen::Vector2d> sf, st;
        for (size_t k : idx) {
            sf.push_back(from[k]);
            st.push_back(to[k]);
        }
        Homography h;
        try {
            h = dlt(sf, st);
        } catch (const DegenerateHomography&) {
            continue;
        }
        std::vector<char> inliers(from.size(), 0);
        size_t count = 0;
        for (size_t i = 0; i < from.size(); ++i)
            if (transfer_error(h, from[i], to[i]) <= params.inlier_threshold) {
                inliers[i] = 1;
                ++count;
            }
        if (count > best_count) {
            best_count = count;
            best_inliers = inliers;
        }
    }
    if (best_count < 4)
        throw DegenerateHomography("fit_homography: consensus set too small");

    std::vector<Eigen::Vector2d> inf, into;
    for (size_t i = 0; i < from.size(); ++i)
        if (best_inliers[i]) {
            inf.push_back(from[i]);
            into.push_back(to[i]);
        }
    return fit_homography_points(inf, into, params.max_condition);
}

}  // namespace midframe
