#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <filesystem>
#include <fstream>

#include "hjb/characteristics.hpp"

using namespace hjb;

TEST_CASE("RK4 characteristic matches the exponential flow at fourth order") {
    Matrix A(2, 2);
    A << -0.3, 1.1, -1.1, -0.3;
    BatchDriftFn drift = [&](const Matrix& X) -> Matrix { return A * X; };
    Vector x0(2);
    x0 << 1.0, 0.4;
    Box big = Box::cube(2, -50.0, 50.0);

    auto tr = integrate_characteristic(x0, drift, 2.0, 1e-3, big);
    Vector exact = (A * 2.0).exp() * x0;
    CHECK((tr.states.col(tr.states.cols() - 1) - exact).norm() < 1e-9);
    CHECK(!tr.exited);
    CHECK(tr.times[tr.times.size() - 1] == doctest::Approx(2.0));

    auto err = [&](double step) {
        auto t = integrate_characteristic(x0, drift, 2.0, step, big);
        return (t.states.col(t.states.cols() - 1) - exact).norm();
    };
    double ratio = err(0.05) / err(0.025);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("integration stops after leaving the domain and marks the exit") {
    BatchDriftFn drift = [](const Matrix& X) -> Matrix {
        Matrix G = Matrix::Zero(X.rows(), X.cols());
        G.row(0).setOnes();
        return G;
    };
    Vector x0 = Vector::Zero(2);
    Box dom = Box::cube(2, -1.0, 1.0);
    auto tr = integrate_characteristic(x0, drift, 10.0, 0.01, dom);
    CHECK(tr.exited);
    Index last = tr.states.cols() - 1;
    CHECK(tr.states(0, last) > 1.0);            // first recorded point outside
    CHECK(tr.states(0, last - 1) <= 1.0 + 1e-12);
    CHECK(tr.times[last] == doctest::Approx(1.01).epsilon(0.02));
    CHECK(tr.arclen[last] == doctest::Approx(tr.times[last]).epsilon(1e-10));  // unit speed
}

TEST_CASE("lockstep batch equals one-at-a-time integration") {
    Matrix A(2, 2);
    A << 0.2, 0.9, -0.9, 0.2;
    BatchDriftFn drift = [&](const Matrix& X) -> Matrix { return A * X; };
    Matrix X0 = sample_initial_states(Box::cube(2, -1.0, 1.0), 7, 42);
    Box dom = Box::cube(2, -1.5, 1.5);
    auto batch = integrate_characteristics(X0, drift, 3.0, 0.01, dom);
    for (int j = 0; j < 7; ++j) {
        auto single = integrate_characteristic(X0.col(j), drift, 3.0, 0.01, dom);
        CHECK(batch[j].states.cols() == single.states.cols());
        CHECK((batch[j].states - single.states).cwiseAbs().maxCoeff() < 1e-13);
        CHECK(batch[j].exited == single.exited);
    }
}

TEST_CASE("discounted labels: constant source gives S/kappa exactly") {
    Vector times = linspace(0.0, 1.3, 57);
    Matrix S = Matrix::Constant(3, 57, 2.5);
    Matrix Y = discounted_along(times, S, 7.0);
    CHECK((Y.array() - 2.5 / 7.0).abs().maxCoeff() < 1e-13);
}

TEST_CASE("discounted labels: exponential source against the analytic integral") {
    const double kappa = 10.0, beta = 2.0;
    Vector times = linspace(0.0, 2.0, 4001);
    Matrix S(1, 4001);
    for (int j = 0; j < 4001; ++j) S(0, j) = std::exp(-beta * times[j]);
    Matrix Y = discounted_along(times, S, kappa);
    // int_0^inf e^{-kappa s} e^{-beta s} ds = 1/(kappa+beta); truncation ~1e-9
    CHECK(std::abs(Y(0, 0) - 1.0 / (kappa + beta)) < 1e-6);
    // discount shift: the label at t_j only depends on the suffix
    Vector times_suffix = times.segment(2000, 2001);
    Matrix Y2 = discounted_along(times_suffix, S.block(0, 2000, 1, 2001), kappa);
    CHECK(std::abs(Y2(0, 0) - Y(0, 2000)) < 1e-14);
}

TEST_CASE("labels satisfy the transport identity along the path") {
    // dY/dt = kappa Y - S along the characteristic
    const double kappa = 5.0;
    Matrix A(2, 2);
    A << 0.0, 1.0, -1.0, 0.0;
    BatchDriftFn drift = [&](const Matrix& X) -> Matrix { return A * X; };
    Vector x0(2);
    x0 << 0.8, 0.0;
    auto tr = integrate_characteristic(x0, drift, 3.0, 1e-3, Box::cube(2, -2.0, 2.0));
    const Index m = tr.times.size();
    Matrix S(1, m);
    for (Index j = 0; j < m; ++j) S(0, j) = tr.states(0, j) * tr.states(0, j) + 0.3;
    Vector V = value_along(tr, S.row(0).transpose(), kappa);
    double worst = 0.0;
    for (Index j = m / 4; j < 3 * m / 4; ++j) {
        double dv = (V[j + 1] - V[j - 1]) / (tr.times[j + 1] - tr.times[j - 1]);
        worst = std::max(worst, std::abs(dv - (kappa * V[j] - S(0, j))));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("arc-length resampling spaces snapshots uniformly along a circle") {
    Matrix A(2, 2);
    A << 0.0, -1.0, 1.0, 0.0;  // rotation, |x| conserved
    BatchDriftFn drift = [&](const Matrix& X) -> Matrix { return A * X; };
    Vector x0(2);
    x0 << 0.5, 0.0;
    auto tr = integrate_characteristic(x0, drift, 2.0 * M_PI, 1e-3, Box::cube(2, -1.0, 1.0));
    Index last = tr.states.cols() - 1;
    CHECK(tr.arclen[last] == doctest::Approx(2.0 * M_PI * 0.5).epsilon(1e-6));

    Vector values = tr.times;  // any labels
    Matrix costates = tr.states;
    auto snaps = arclength_resample(tr, values, costates, Box::cube(2, -1.0, 1.0), 21);
    REQUIRE(snaps.size() == 21);
    const double total = tr.arclen[last];
    for (int q = 0; q < 21; ++q) {
        CHECK(snaps[q].arclen == doctest::Approx(q * total / 20.0).epsilon(1e-12));
        CHECK(snaps[q].x.norm() == doctest::Approx(0.5).epsilon(1e-5));
    }

    // stationary path collapses to one snapshot
    BatchDriftFn zero = [](const Matrix& X) -> Matrix { return Matrix::Zero(X.rows(), X.cols()); };
    auto st = integrate_characteristic(x0, zero, 1.0, 0.01, Box::cube(2, -1.0, 1.0));
    auto ssnaps = arclength_resample(st, Vector::Ones(st.times.size()),
                                     Matrix::Ones(2, st.times.size()), Box::cube(2, -1.0, 1.0), 9);
    CHECK(ssnaps.size() == 1);
    CHECK((ssnaps[0].x - x0).norm() < 1e-14);
}

TEST_CASE("resampling uses only the prefix inside the box and drops short paths") {
    BatchDriftFn drift = [](const Matrix& X) -> Matrix {
        Matrix G = Matrix::Zero(X.rows(), X.cols());
        G.row(0).setOnes();
        return G;
    };
    Vector x0 = Vector::Zero(1);
    Box sim = Box::cube(1, -4.0, 4.0), train = Box::cube(1, -1.0, 1.0);
    auto tr = integrate_characteristic(x0, drift, 6.0, 0.01, sim);
    auto snaps = arclength_resample(tr, tr.times, tr.states, train, 11);
    REQUIRE(snaps.size() == 11);
    for (const auto& s : snaps) CHECK(s.x[0] <= 1.0 + 1e-12);
    CHECK(snaps.back().arclen == doctest::Approx(1.0).epsilon(0.02));

    // fewer than 3 recorded points inside the box -> dropped
    Vector far = Vector::Constant(1, 0.995);
    auto tr2 = integrate_characteristic(far, drift, 6.0, 0.01, sim);
    CHECK(arclength_resample(tr2, tr2.times, tr2.states, train, 11).empty());
}

TEST_CASE("initial state sampling is boxed and seed-deterministic") {
    Box box = Box::cube(3, -2.0, 1.0);
    Matrix X1 = sample_initial_states(box, 50, 99), X2 = sample_initial_states(box, 50, 99);
    Matrix X3 = sample_initial_states(box, 50, 100);
    CHECK((X1 - X2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((X1 - X3).cwiseAbs().maxCoeff() > 1e-6);
    for (int j = 0; j < 50; ++j) CHECK(box.contains(X1.col(j)));
}

TEST_CASE("snapshot CSV layout") {
    std::vector<LabelledSnapshot> batch(2);
    for (int i = 0; i < 2; ++i) {
        batch[i].traj_id = i;
        batch[i].t = 0.5 * i;
        batch[i].arclen = 0.25 * i;
        batch[i].x = Vector::Constant(2, 1.5 + i);
        batch[i].value = 3.25;
        batch[i].costate = Vector::Constant(2, -0.5);
    }
    auto path = (std::filesystem::temp_directory_path() / "hjb_snaps.csv").string();
    save_snapshots_csv(batch, path);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "traj_id,t,arclen,x_1,x_2,V,lambda_1,lambda_2");
    std::getline(in, row);
    CHECK(row == "0,0,0,1.5,1.5,3.25,-0.5,-0.5");
    std::getline(in, row);
    CHECK(row == "1,0.5,0.25,2.5,2.5,3.25,-0.5,-0.5");
    std::filesystem::remove(path);
}
