#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "onebit/analysis.hpp"
#include "onebit/sensing.hpp"

using namespace onebit;

TEST_CASE("t_ave") {
    SECTION("single measurement reduces to |x|") {
        Eigen::MatrixXd A(1, 1);
        A << 1.0;
        Eigen::VectorXd x(1);
        x << -2.5;
        Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(1, 1);
        REQUIRE(t_ave(explicit_model(A), x, tau) == 2.5);
    }
    SECTION("matches a brute-force double loop") {
        const auto model = gen_gaussian_model(12, 5, 11);
        const auto x = gen_dense_signal(5, 12);
        rng::Stream stream(13);
        Eigen::MatrixXd tau = stream.gaussian_matrix(12, 4);
        double brute = 0.0;
        for (Index l = 0; l < 4; ++l)
            for (Index j = 0; j < 12; ++j)
                brute += std::abs(model.entries.row(j).dot(x.values) - tau(j, l));
        brute /= 48.0;
        REQUIRE(t_ave(model, x.values, tau) == Catch::Approx(brute).epsilon(1e-14));
    }
    SECTION("x = 0 with uniform dither concentrates at lambda/2") {
        const double lambda = 2.0;
        const Index n = 50'000;
        Eigen::MatrixXd A = Eigen::MatrixXd::Ones(n, 1);
        rng::Stream stream(14);
        Eigen::MatrixXd tau(n, 1);
        for (Index j = 0; j < n; ++j) tau(j, 0) = stream.uniform(-lambda, lambda);
        // |tau| ~ U[0, lambda]: mean lambda/2, sd lambda/sqrt(12).
        const double se = lambda / std::sqrt(12.0 * n);
        REQUIRE(std::abs(t_ave(explicit_model(A), Eigen::VectorXd::Zero(1), tau) - lambda / 2.0) <=
                3.0 * se);
    }
}

TEST_CASE("fvp_mean formulas") {
    REQUIRE(fvp_mean(FvpKind::SubGaussian, 2.0, 0.0) == 1.0);
    REQUIRE(fvp_mean(FvpKind::Dct, 2.0, 0.0) == 1.0);
    REQUIRE(fvp_mean(FvpKind::SubGaussian, 1.0, 1.0) == 1.0);
    REQUIRE(fvp_mean(FvpKind::Dct, 1.0, 1.0) == 0.75);
    // No-DR mean with one corrupted row.
    REQUIRE(fvp_mean(FvpKind::NoDr, 1.0, 1.0, 10, 2.0) ==
            Catch::Approx(0.9 * 1.0 + 2.0 / 10.0));
    REQUIRE_THROWS_AS(fvp_mean(FvpKind::SubGaussian, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("empirical t_ave concentrates at the sub-gaussian fvp mean") {
    const Index n = 100'000, d = 50;
    const auto model = gen_gaussian_model(n, d, 21);
    Eigen::VectorXd x = gen_dense_signal(d, 22).values;
    x /= x.norm();
    const double lambda = 5.0;  // dominates max_j |<a_j, x>| ~ N(0,1) tails at this n
    rng::Stream stream(23);
    Eigen::MatrixXd tau(n, 1);
    for (Index j = 0; j < n; ++j) tau(j, 0) = stream.uniform(-lambda, lambda);
    const double observed = t_ave(model, x, tau);
    const double mean = fvp_mean(FvpKind::SubGaussian, lambda, 1.0);
    // Distances are bounded by lambda + max|y|; their sd is below lambda.
    const double se = lambda / std::sqrt(static_cast<double>(n));
    REQUIRE(std::abs(observed - mean) <= 3.0 * se);
}

TEST_CASE("sample complexity expressions") {
    ComplexityBudget sparse;
    sparse.set = ComplexityBudget::Set::Sparse;
    sparse.s = 10;
    sparse.d = 10;
    sparse.epsilon = 0.5;
    sparse.rho = 0.5;
    const auto degenerate = sample_complexity(sparse);
    REQUIRE(degenerate.value == 0.0);
    REQUIRE(degenerate.degenerate);

    ComplexityBudget lowrank;
    lowrank.set = ComplexityBudget::Set::LowRank;
    lowrank.n1 = 30;
    lowrank.n2 = 40;
    lowrank.rank = 2;
    lowrank.epsilon = 0.5;
    lowrank.rho = 0.1;
    const double base = sample_complexity(lowrank).value;
    lowrank.rank = 4;
    REQUIRE(sample_complexity(lowrank).value == Catch::Approx(2.0 * base));
    lowrank.rank = 2;
    lowrank.epsilon = 0.25;
    REQUIRE(sample_complexity(lowrank).value == Catch::Approx(4.0 * base));

    ComplexityBudget bad = lowrank;
    bad.rho = 0.0;
    REQUIRE_THROWS_AS(sample_complexity(bad), std::invalid_argument);
}

TEST_CASE("recovery radius formulas") {
    REQUIRE(recovery_radius(RadiusKind::Consistent, 0.01, 1.0) == Catch::Approx(0.4));
    REQUIRE(recovery_radius(RadiusKind::Hamming, 0.01, 1.0, 0.0) ==
            recovery_radius(RadiusKind::Consistent, 0.01, 1.0));
    REQUIRE(recovery_radius(RadiusKind::NoDrL, 0.01, 1.0, 0.0, 10, 0) ==
            Catch::Approx(recovery_radius(RadiusKind::Consistent, 0.01, 1.0)));
    // Monotone in the Hamming distance and in L.
    double prev = 0.0;
    for (double h : {0.0, 0.1, 0.3, 0.8}) {
        const double r = recovery_radius(RadiusKind::Hamming, 0.01, 2.0, h);
        REQUIRE(r >= prev);
        prev = r;
    }
    prev = 0.0;
    for (Index L : {0, 2, 5, 8}) {
        const double r = recovery_radius(RadiusKind::NoDrL, 0.01, 2.0, 0.0, 10, L);
        REQUIRE(r >= prev);
        prev = r;
    }
    REQUIRE_THROWS_AS(recovery_radius(RadiusKind::NoDrL, 0.01, 1.0, 0.0, 10, 10),
                      std::invalid_argument);
}

TEST_CASE("hamming distance") {
    Eigen::VectorXi a(3), b(3);
    a << 1, 1, -1;
    b << 1, -1, -1;
    REQUIRE(hamming_distance(a, a) == 0.0);
    REQUIRE(hamming_distance(a, b) == Catch::Approx(1.0 / 3.0));
    rng::Stream stream(31);
    Eigen::VectorXi r1(100), r2(100);
    for (Index i = 0; i < 100; ++i) {
        r1[i] = stream.uniform() < 0.5 ? -1 : 1;
        r2[i] = stream.uniform() < 0.5 ? -1 : 1;
    }
    Index brute = 0;
    for (Index i = 0; i < 100; ++i)
        if (r1[i] != r2[i]) ++brute;
    REQUIRE(hamming_distance(r1, r2) == Catch::Approx(brute / 100.0));
    Eigen::VectorXi shorter(2);
    REQUIRE_THROWS_AS(hamming_distance(a, shorter), std::invalid_argument);
}

TEST_CASE("scaled condition number") {
    REQUIRE(scaled_condition_number(Eigen::MatrixXd::Identity(7, 7)) ==
            Catch::Approx(std::sqrt(7.0)));
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
    D(0, 0) = 1.0;
    D(1, 1) = 2.0;
    REQUIRE(scaled_condition_number(D) == Catch::Approx(std::sqrt(5.0)));
    // kappa(alpha U) = sqrt(d) for any orthonormal-column U and alpha != 0.
    rng::Stream stream(41);
    const Eigen::MatrixXd G = stream.gaussian_matrix(50, 8);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    const Eigen::MatrixXd U = qr.householderQ() * Eigen::MatrixXd::Identity(50, 8);
    for (double alpha : {0.37, -4.2}) {
        REQUIRE(scaled_condition_number(alpha * U) == Catch::Approx(std::sqrt(8.0)).epsilon(1e-10));
    }
    REQUIRE_THROWS_AS(scaled_condition_number(Eigen::MatrixXd::Zero(3, 2)), std::runtime_error);
}

TEST_CASE("kappa invariance check") {
    // All m in {1..10} at d <= 20.
    const auto model = gen_gaussian_model(50, 20, 51);
    for (Index m = 1; m <= 10; ++m) {
        const auto report = kappa_invariance_check(model.entries, m, 52 + m);
        REQUIRE(report.ok);
        REQUIRE(report.relative_kappa_error <= 1e-8);
        REQUIRE(report.gram_error <= 1e-10);
        REQUIRE(report.frob_error <= 1e-10);
    }
    // kappa(Omega-tilde) = sqrt(n) when A = I.
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(12, 12);
    const auto report = kappa_invariance_check(I, 5, 61);
    REQUIRE(report.kappa_P == Catch::Approx(std::sqrt(12.0)).epsilon(1e-12));
}

TEST_CASE("gaussian complexity Monte Carlo") {
    SECTION("singleton {e1} estimates E|g_1| = sqrt(2/pi)") {
        Eigen::MatrixXd cloud = Eigen::MatrixXd::Zero(1, 6);
        cloud(0, 0) = 1.0;
        const auto est = gaussian_complexity_mc(cloud, 20'000, 71);
        REQUIRE(std::abs(est.value - std::sqrt(2.0 / std::numbers::pi)) <= 4.0 * est.std_error);
    }
    SECTION("zero cloud gives zero") {
        const auto est = gaussian_complexity_mc(Eigen::MatrixXd::Zero(1, 4), 100, 72);
        REQUIRE(est.value == 0.0);
    }
    SECTION("homogeneity: doubling the cloud doubles the estimate") {
        rng::Stream stream(73);
        const Eigen::MatrixXd cloud = stream.gaussian_matrix(15, 4);
        const auto est1 = gaussian_complexity_mc(cloud, 500, 74);
        const auto est2 = gaussian_complexity_mc(2.0 * cloud, 500, 74);
        REQUIRE(est2.value == Catch::Approx(2.0 * est1.value).epsilon(1e-12));
    }
    SECTION("empty cloud is rejected") {
        REQUIRE_THROWS_AS(gaussian_complexity_mc(Eigen::MatrixXd(0, 3), 10, 75),
                          std::invalid_argument);
    }
}

TEST_CASE("convergence floors") {
    FloorParams p;
    p.kappa = std::sqrt(10.0);
    p.d = 10;
    REQUIRE(convergence_floor(FloorKind::Rka, p) ==
            Catch::Approx(convergence_floor(FloorKind::PrSkm, p)));
    p.n = 25;
    p.delta = 0.0;
    REQUIRE(convergence_floor(FloorKind::Rip, p) == Catch::Approx(1.0 - 1.0 / 25.0));
    REQUIRE(convergence_floor(FloorKind::Sketch, p) > convergence_floor(FloorKind::PrSkm, p));
    p.delta = 0.1;
    REQUIRE(convergence_floor(FloorKind::Gaussian, p) ==
            Catch::Approx(1.0 - 0.81 / (1.0049 * 10.0)));
    p.c = 1.0;
    p.sigma_min_sq = 4.0;
    p.frob_sq = 100.0;
    REQUIRE(convergence_floor(FloorKind::Block, p) ==
            Catch::Approx(1.0 - 4.0 * std::log(25.0) / 100.0));
}

TEST_CASE("fvp report CSV") {
    FvpReport report;
    report.t_ave = 1.5;
    report.theoretical_mean = 1.25;
    report.deviation = 0.25;
    report.lambda = 2.0;
    report.m_prime = 100;
    report.recovery_radius = 4.0 * std::sqrt(0.5);
    std::ostringstream os;
    FvpReport::csv_header(os);
    report.to_csv(os);
    REQUIRE(os.str().find("1.5,1.25,0.25,2,100,") != std::string::npos);
}
