#include <doctest.h>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "skylift/netfeat.hpp"
#include "skylift/rng.hpp"

using namespace skylift;
namespace ad = skylift::ad;

namespace {

// Fully-masked network on n airports (every ordered pair is a route).
net::Network complete_network(int n) {
    std::vector<std::string> airports;
    std::vector<net::Route> routes;
    for (int i = 0; i < n; ++i) airports.push_back("A" + std::to_string(i));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) routes.push_back({"R" + std::to_string(i) + "_" + std::to_string(j), i, j});
    return net::Network(std::move(airports), std::move(routes));
}

Eigen::MatrixXd random_frequencies(Rng& rng, const net::Network& network, double lo = 0.5,
                                   double hi = 5.0) {
    const int n = network.airport_count();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (network.masked(i, j)) a(i, j) = rng.uniform(lo, hi);
    return a;
}

}  // namespace

TEST_CASE("degree_centrality: zero matrix, single edge, and naive oracle") {
    ad::Tape tape;
    auto zero = tape.variable(Eigen::MatrixXd::Zero(3, 3));
    auto dz = net::degree_centrality(zero);
    CHECK(dz.out_deg.matrix().cwiseAbs().maxCoeff() == 0.0);
    CHECK(dz.in_deg.matrix().cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd two = Eigen::MatrixXd::Zero(2, 2);
    two(0, 1) = 3.0;
    auto dv = net::degree_centrality(ad::Value::constant(two));
    CHECK(dv.out_deg.matrix()(0, 0) == 3.0);
    CHECK(dv.out_deg.matrix()(1, 0) == 0.0);
    CHECK(dv.in_deg.matrix()(0, 0) == 0.0);
    CHECK(dv.in_deg.matrix()(0, 1) == 3.0);

    Rng rng(11);
    Eigen::MatrixXd a(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) a(i, j) = i == j ? 0.0 : rng.uniform(0.0, 4.0);
    auto d = net::degree_centrality(ad::Value::constant(a));
    std::vector<double> out_ref, in_ref;
    oracles::naive_degrees(a, out_ref, in_ref);
    for (int i = 0; i < 5; ++i) {
        CHECK(d.out_deg.matrix()(i, 0) == doctest::Approx(out_ref[static_cast<std::size_t>(i)]));
        CHECK(d.in_deg.matrix()(0, i) == doctest::Approx(in_ref[static_cast<std::size_t>(i)]));
    }
}

TEST_CASE("degree_centrality is linear in the frequency matrix") {
    Rng rng(5);
    Eigen::MatrixXd m1(4, 4), m2(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            m1(i, j) = rng.uniform(0.0, 3.0);
            m2(i, j) = rng.uniform(0.0, 3.0);
        }
    const double alpha = 0.7, beta = -1.3;
    auto d1 = net::degree_centrality(ad::Value::constant(m1));
    auto d2 = net::degree_centrality(ad::Value::constant(m2));
    auto dc = net::degree_centrality(ad::Value::constant((alpha * m1 + beta * m2).eval()));
    Eigen::MatrixXd expect_out = alpha * d1.out_deg.matrix() + beta * d2.out_deg.matrix();
    Eigen::MatrixXd expect_in = alpha * d1.in_deg.matrix() + beta * d2.in_deg.matrix();
    CHECK((dc.out_deg.matrix() - expect_out).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((dc.in_deg.matrix() - expect_in).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("degree monotonicity: raising one frequency never lowers endpoint degrees") {
    Rng rng(17);
    auto network = complete_network(4);
    Eigen::MatrixXd a = random_frequencies(rng, network);
    auto before = net::degree_centrality(ad::Value::constant(a));
    Eigen::MatrixXd bumped = a;
    bumped(1, 3) += 2.5;
    auto after = net::degree_centrality(ad::Value::constant(bumped));
    CHECK(after.out_deg.matrix()(1, 0) >= before.out_deg.matrix()(1, 0));
    CHECK(after.in_deg.matrix()(0, 3) >= before.in_deg.matrix()(0, 3));
    for (int i = 0; i < 4; ++i) {
        CHECK(after.out_deg.matrix()(i, 0) >= before.out_deg.matrix()(i, 0) - 1e-15);
        CHECK(after.in_deg.matrix()(0, i) >= before.in_deg.matrix()(0, i) - 1e-15);
    }
}

TEST_CASE("ego_density: complete triangle, isolated airport, star enumeration") {
    auto tri = complete_network(3);
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 3);
    ones.diagonal().setZero();
    CHECK(net::ego_density(ad::Value::constant(ones), tri, 0).scalar() == doctest::Approx(1.0));

    // Airport 4 is declared but appears on no route.
    {
        std::vector<std::string> airports{"H", "L1", "L2", "L3", "ISO"};
        std::vector<net::Route> routes;
        for (int leaf = 1; leaf <= 3; ++leaf) {
            routes.push_back({"out" + std::to_string(leaf), 0, leaf});
            routes.push_back({"in" + std::to_string(leaf), leaf, 0});
        }
        net::Network star(std::move(airports), std::move(routes));
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 5);
        for (int leaf = 1; leaf <= 3; ++leaf) {
            a(0, leaf) = 2.0;
            a(leaf, 0) = 2.0;
        }
        CHECK(net::ego_density(ad::Value::constant(a), star, 4).scalar() == 0.0);
        // Star: center + 3 leaves, spokes weight 2 both directions, no
        // leaf-leaf edges: 12 / (4*3) = 1.0.
        CHECK(net::ego_density(ad::Value::constant(a), star, 0).scalar() == doctest::Approx(1.0));
        // Cross-check every airport against the enumeration oracle.
        for (int v = 0; v < 5; ++v) {
            CHECK(net::ego_density(ad::Value::constant(a), star, v).scalar() ==
                  doctest::Approx(oracles::naive_ego_density(a, star.mask(), v)));
        }
    }
}

TEST_CASE("ego_density is invariant to relabeling airports outside the neighborhood") {
    // Two disjoint cliques {0,1,2} and {3,4,5}; relabeling within the far
    // clique must not change densities in the near one.
    auto build = [](bool swap_far) {
        std::vector<std::string> airports{"a", "b", "c", "d", "e", "f"};
        std::vector<net::Route> routes;
        auto add_pair = [&](int i, int j, const std::string& tag) {
            routes.push_back({tag + "f", i, j});
            routes.push_back({tag + "r", j, i});
        };
        add_pair(0, 1, "ab");
        add_pair(0, 2, "ac");
        add_pair(1, 2, "bc");
        if (swap_far) {
            add_pair(3, 5, "dx");
            add_pair(4, 5, "ex");
        } else {
            add_pair(3, 4, "dx");
            add_pair(4, 5, "ex");
        }
        return net::Network(std::move(airports), std::move(routes));
    };
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
    Rng rng(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) a(i, j) = rng.uniform(0.5, 2.0);
    Eigen::MatrixXd b = a;
    b(3, 5) = b(5, 3) = a(3, 4);  // move the far clique's weights around
    auto n1 = build(false);
    auto n2 = build(true);
    for (int v = 0; v < 3; ++v) {
        CHECK(net::ego_density(ad::Value::constant(a), n1, v).scalar() ==
              doctest::Approx(net::ego_density(ad::Value::constant(b), n2, v).scalar()));
    }
}

TEST_CASE("pagerank: trivial, symmetric, and linear-solve oracle cases") {
    net::PagerankConfig cfg;

    // Single airport.
    auto single = net::pagerank(ad::Value::constant(Eigen::MatrixXd::Zero(1, 1)), cfg);
    CHECK(single.matrix()(0, 0) == doctest::Approx(1.0));

    // Complete graph on 4 nodes with equal weights: uniform by symmetry.
    Eigen::MatrixXd k4 = Eigen::MatrixXd::Ones(4, 4);
    k4.diagonal().setZero();
    auto pr4 = net::pagerank(ad::Value::constant(k4), cfg);
    for (int i = 0; i < 4; ++i) CHECK(pr4.matrix()(0, i) == doctest::Approx(0.25));

    // Symmetric 2-cycle.
    Eigen::MatrixXd two = Eigen::MatrixXd::Zero(2, 2);
    two(0, 1) = two(1, 0) = 1.0;
    auto pr2 = net::pagerank(ad::Value::constant(two), cfg);
    CHECK(pr2.matrix()(0, 0) == doctest::Approx(0.5));
    CHECK(pr2.matrix()(0, 1) == doctest::Approx(0.5));

    // Asymmetric 3-node graph against the dense fixed-point solve.
    Eigen::MatrixXd a3 = Eigen::MatrixXd::Zero(3, 3);
    a3(0, 1) = 4.0;
    a3(0, 2) = 1.0;
    a3(1, 2) = 2.0;
    a3(2, 0) = 3.0;
    auto pr3 = net::pagerank(ad::Value::constant(a3), cfg);
    Eigen::VectorXd ref = oracles::pagerank_linear_solve(a3, cfg.damping);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(pr3.matrix()(0, i) - ref(i)) <= 1e-9);
}

TEST_CASE("pagerank output is a probability distribution for any non-negative matrix") {
    Rng rng(99);
    net::PagerankConfig cfg;
    for (int trial = 0; trial < 25; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 8));
        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                a(i, j) = (i != j && rng.uniform() < 0.6) ? rng.uniform(0.0, 10.0) : 0.0;
        auto pr = net::pagerank(ad::Value::constant(a), cfg);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double p = pr.matrix()(0, i);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            total += p;
        }
        CHECK(std::abs(total - 1.0) <= 1e-9);
    }
}

TEST_CASE("network feature gradients pass the finite-difference check") {
    Rng rng(123);
    for (int trial = 0; trial < 3; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(3, 6));
        auto network = complete_network(n);
        Eigen::MatrixXd a0 = random_frequencies(rng, network, 0.5, 4.0);
        net::PagerankConfig cfg;
        cfg.iterations = 30;

        // Scalar probe: weighted sum of one full feature vector.
        const int route = static_cast<int>(rng.uniform_int(0, network.route_count() - 1));
        Eigen::VectorXd statics = Eigen::VectorXd::Zero(net::kFeatureCount);
        Eigen::MatrixXd probe(1, net::kFeatureCount);
        for (int i = 0; i < net::kFeatureCount; ++i) probe(0, i) = rng.uniform(-1.0, 1.0);

        auto eval = [&](const Eigen::MatrixXd& a, Eigen::MatrixXd* grad) {
            ad::Tape tape;
            auto av = tape.variable(a);
            auto nf = net::network_features(av, network, cfg);
            auto feat = net::assemble_features(av, nf, network, route, statics);
            auto out = ad::matmul(ad::Value::constant(probe), feat);
            if (grad) *grad = tape.gradient(out, av);
            return out.scalar();
        };

        Eigen::MatrixXd analytic;
        eval(a0, &analytic);
        Eigen::MatrixXd fd = oracles::fd_gradient(
            [&](const Eigen::MatrixXd& a) { return eval(a, nullptr); }, a0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (!network.masked(i, j)) continue;  // off-mask cells are not decision entries
                CAPTURE(trial);
                CAPTURE(i);
                CAPTURE(j);
                CHECK(oracles::rel_err(analytic(i, j), fd(i, j)) <= 1e-4);
            }
    }
}

TEST_CASE("assemble_features: zero matrix zeroes the network slots; ordering round-trips") {
    auto network = complete_network(4);
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 4);
    net::PagerankConfig cfg;
    Eigen::VectorXd statics(net::kFeatureCount);
    for (int i = 0; i < net::kFeatureCount; ++i) statics(i) = 100.0 + i;

    auto nf = net::network_features(ad::Value::constant(zero), network, cfg);
    auto feat = net::assemble_features(ad::Value::constant(zero), nf, network, 0, statics);
    const Eigen::MatrixXd f = feat.matrix();
    REQUIRE(f.rows() == net::kFeatureCount);

    CHECK(f(net::kFrequency, 0) == 0.0);
    for (int i = net::kInDegreeSrc; i <= net::kOutDegreeDst; ++i) CHECK(f(i, 0) == 0.0);
    CHECK(f(net::kEgoDensitySrc, 0) == 0.0);
    CHECK(f(net::kEgoDensityDst, 0) == 0.0);
    // PageRank of an all-dangling network is uniform, not zero.
    CHECK(f(net::kPagerankSrc, 0) == doctest::Approx(0.25));
    for (int i = 0; i < net::kFeatureCount; ++i)
        if (!net::is_network_feature(i)) CHECK(f(i, 0) == statics(i));

    for (int i = 0; i < net::kFeatureCount; ++i)
        CHECK(net::feature_index(net::feature_name(i)) == i);
    CHECK_THROWS_AS(net::feature_index("bogus"), std::invalid_argument);
}

TEST_CASE("assemble_features matches independently computed centralities") {
    Rng rng(7);
    auto network = complete_network(4);
    Eigen::MatrixXd a = random_frequencies(rng, network, 0.5, 6.0);
    net::PagerankConfig cfg;
    Eigen::VectorXd statics = Eigen::VectorXd::Zero(net::kFeatureCount);

    auto nf = net::network_features(ad::Value::constant(a), network, cfg);
    std::vector<double> out_ref, in_ref;
    oracles::naive_degrees(a, out_ref, in_ref);
    Eigen::VectorXd pr_ref = oracles::pagerank_linear_solve(a, cfg.damping);

    for (int route = 0; route < network.route_count(); ++route) {
        auto feat = net::assemble_features(ad::Value::constant(a), nf, network, route, statics);
        const Eigen::MatrixXd f = feat.matrix();
        const auto& r = network.route(route);
        CHECK(f(net::kFrequency, 0) == doctest::Approx(a(r.src, r.dst)));
        CHECK(f(net::kInDegreeSrc, 0) == doctest::Approx(in_ref[static_cast<std::size_t>(r.src)]));
        CHECK(f(net::kInDegreeDst, 0) == doctest::Approx(in_ref[static_cast<std::size_t>(r.dst)]));
        CHECK(f(net::kOutDegreeSrc, 0) == doctest::Approx(out_ref[static_cast<std::size_t>(r.src)]));
        CHECK(f(net::kOutDegreeDst, 0) == doctest::Approx(out_ref[static_cast<std::size_t>(r.dst)]));
        CHECK(std::abs(f(net::kPagerankSrc, 0) - pr_ref(r.src)) <= 1e-9);
        CHECK(std::abs(f(net::kPagerankDst, 0) - pr_ref(r.dst)) <= 1e-9);
        CHECK(f(net::kEgoDensitySrc, 0) ==
              doctest::Approx(oracles::naive_ego_density(a, network.mask(), r.src)));
        CHECK(f(net::kEgoDensityDst, 0) ==
              doctest::Approx(oracles::naive_ego_density(a, network.mask(), r.dst)));
    }
}

TEST_CASE("frequency matrix round-trips through route vectors and validates the mask") {
    auto network = complete_network(3);
    Eigen::VectorXd f(network.route_count());
    for (int i = 0; i < f.size(); ++i) f(i) = i + 0.5;
    auto m = net::FrequencyMatrix::from_route_frequencies(network, "C0", f);
    m.validate(network);
    CHECK((m.route_frequencies(network) - f).cwiseAbs().maxCoeff() == 0.0);

    m.values(0, 0) = 1.0;  // diagonal is never a route
    CHECK_THROWS_AS(m.validate(network), std::invalid_argument);
}
