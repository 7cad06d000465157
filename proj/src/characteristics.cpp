#include "hjb/characteristics.hpp"

#include <fstream>

namespace hjb {

std::vector<Trajectory> integrate_characteristics(const Matrix& X0, const BatchDriftFn& drift,
                                                  double horizon, double step, const Box& domain,
                                                  int record_stride) {
    const Index d = X0.rows(), n = X0.cols();
    const int total_steps = std::max(1, static_cast<int>(std::ceil(horizon / step)));
    const double dt = horizon / total_steps;

    std::vector<std::vector<Vector>> recorded(n);
    std::vector<std::vector<double>> rec_t(n);
    std::vector<bool> active(n, true), exited(n, false);
    Matrix X = X0;
    for (Index j = 0; j < n; ++j) {
        recorded[j].push_back(X0.col(j));
        rec_t[j].push_back(0.0);
    }

    Index n_active = n;
    std::vector<Index> map(n);  // active slot -> trajectory id
    for (Index j = 0; j < n; ++j) map[j] = j;

    for (int s = 1; s <= total_steps && n_active > 0; ++s) {
        Matrix Xa(d, n_active);
        for (Index j = 0; j < n_active; ++j) Xa.col(j) = X.col(map[j]);
        Matrix k1 = drift(Xa);
        Matrix k2 = drift(Xa + (0.5 * dt) * k1);
        Matrix k3 = drift(Xa + (0.5 * dt) * k2);
        Matrix k4 = drift(Xa + dt * k3);
        Xa += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        std::vector<Index> next_map;
        next_map.reserve(n_active);
        for (Index j = 0; j < n_active; ++j) {
            Index id = map[j];
            X.col(id) = Xa.col(j);
            bool out = !domain.contains(Xa.col(j));
            if (out || s % record_stride == 0 || s == total_steps) {
                recorded[id].push_back(Xa.col(j));
                rec_t[id].push_back(s * dt);
            }
            if (out)
                exited[id] = true;
            else
                next_map.push_back(id);
        }
        map = std::move(next_map);
        n_active = static_cast<Index>(map.size());
    }

    std::vector<Trajectory> out(n);
    for (Index j = 0; j < n; ++j) {
        Trajectory& tr = out[j];
        tr.id = static_cast<int>(j);
        tr.exited = exited[j];
        const Index m = static_cast<Index>(recorded[j].size());
        tr.states.resize(d, m);
        tr.times.resize(m);
        tr.arclen.resize(m);
        for (Index k = 0; k < m; ++k) {
            tr.states.col(k) = recorded[j][k];
            tr.times[k] = rec_t[j][k];
            tr.arclen[k] = k == 0 ? 0.0
                                  : tr.arclen[k - 1] + (recorded[j][k] - recorded[j][k - 1]).norm();
        }
    }
    return out;
}

Trajectory integrate_characteristic(const Vector& x0, const BatchDriftFn& drift, double horizon,
                                    double step, const Box& domain, int record_stride) {
    Matrix X0(x0.size(), 1);
    X0.col(0) = x0;
    return integrate_characteristics(X0, drift, horizon, step, domain, record_stride)[0];
}

Matrix discounted_along(const Vector& times, const Matrix& sources, double kappa) {
    const Index m = times.size();
    Matrix Y(sources.rows(), m);
    Y.col(m - 1) = sources.col(m - 1) / kappa;  // frozen-endpoint tail
    for (Index j = m - 2; j >= 0; --j) {
        double dt = times[j + 1] - times[j];
        double x = kappa * dt, E = std::exp(-x);
        // exact weights for a source linear on the interval
        double i1 = (1.0 - E * (1.0 + x)) / (kappa * kappa * dt);
        double i0 = (1.0 - E) / kappa - i1;
        Y.col(j) = E * Y.col(j + 1) + i0 * sources.col(j) + i1 * sources.col(j + 1);
    }
    return Y;
}

Vector value_along(const Trajectory& traj, const Vector& value_source, double kappa) {
    return discounted_along(traj.times, value_source.transpose(), kappa).row(0);
}

Matrix gradient_along(const Trajectory& traj, const Matrix& grad_sources, double kappa) {
    return discounted_along(traj.times, grad_sources, kappa);
}

std::vector<LabelledSnapshot> arclength_resample(const Trajectory& traj, const Vector& values,
                                                 const Matrix& costates, const Box& box,
                                                 int snapshots) {
    // prefix inside the box (first exit truncates)
    Index m = 0;
    while (m < traj.states.cols() && box.contains(traj.states.col(m))) ++m;
    std::vector<LabelledSnapshot> out;
    if (m < 3) return out;

    auto at = [&](Index k) {
        LabelledSnapshot s;
        s.traj_id = traj.id;
        s.t = traj.times[k];
        s.arclen = traj.arclen[k];
        s.x = traj.states.col(k);
        s.value = values[k];
        s.costate = costates.col(k);
        return s;
    };

    const double total = traj.arclen[m - 1];
    if (total < 1e-14) {  // stationary path: a single labelled point
        out.push_back(at(0));
        return out;
    }
    Index k = 0;
    for (int q = 0; q < snapshots; ++q) {
        double target = total * q / (snapshots - 1);
        while (k + 2 < m && traj.arclen[k + 1] < target) ++k;
        double seg = traj.arclen[k + 1] - traj.arclen[k];
        double w = seg < 1e-300 ? 0.0 : std::clamp((target - traj.arclen[k]) / seg, 0.0, 1.0);
        LabelledSnapshot s;
        s.traj_id = traj.id;
        s.t = (1.0 - w) * traj.times[k] + w * traj.times[k + 1];
        s.arclen = target;
        s.x = (1.0 - w) * traj.states.col(k) + w * traj.states.col(k + 1);
        s.value = (1.0 - w) * values[k] + w * values[k + 1];
        s.costate = (1.0 - w) * costates.col(k) + w * costates.col(k + 1);
        out.push_back(std::move(s));
    }
    return out;
}

Matrix sample_initial_states(const Box& box, int n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(box.dim(), n);
    for (int j = 0; j < n; ++j) X.col(j) = rng.uniform_in(box);
    return X;
}

void save_snapshots_csv(const std::vector<LabelledSnapshot>& batch, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    const Index d = batch.empty() ? 0 : batch.front().x.size();
    out << "traj_id,t,arclen";
    for (Index i = 1; i <= d; ++i) out << ",x_" << i;
    out << ",V";
    for (Index i = 1; i <= d; ++i) out << ",lambda_" << i;
    out << "\n";
    for (const auto& s : batch) {
        out << s.traj_id << "," << fmt(s.t) << "," << fmt(s.arclen);
        for (Index i = 0; i < d; ++i) out << "," << fmt(s.x[i]);
        out << "," << fmt(s.value);
        for (Index i = 0; i < d; ++i) out << "," << fmt(s.costate[i]);
        out << "\n";
    }
}

}  // namespace hjb
