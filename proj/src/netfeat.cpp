//
// Copyright 2026 The Skylift Authors.
// SPDX-License-Identifier: Apache-2.0
//
#include "skylift/netfeat.hpp"

#include <array>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "skylift/errors.hpp"

namespace skylift::net {

namespace {

// Rows whose total frequency falls at or below this are treated as dangling
// (uniform teleport, zero gradient) to keep 1/rowsum bounded.
constexpr double kDanglingThreshold = 1e-12;

const std::array<std::string, kFeatureCount>& names() {
    static const std::array<std::string, kFeatureCount> kNames = {
        "price",        "freq",         "delay_ratio", "delay_min",    "cancel_ratio",
        "divert_ratio", "fatal",        "serious",     "minor",        "aircraft_size",
        "seat_avail",   "in_deg_src",   "in_deg_dst",  "out_deg_src",  "out_deg_dst",
        "pagerank_src", "pagerank_dst", "ego_density_src", "ego_density_dst"};
    return kNames;
}

}  // namespace

bool is_network_feature(int index) {
    return index == kFrequency || (index >= kInDegreeSrc && index <= kEgoDensityDst);
}

const std::string& feature_name(int index) {
    if (index < 0 || index >= kFeatureCount)
        throw std::invalid_argument("feature_name: index out of range");
    return names()[static_cast<std::size_t>(index)];
}

int feature_index(const std::string& name) {
    for (int i = 0; i < kFeatureCount; ++i)
        if (names()[static_cast<std::size_t>(i)] == name) return i;
    throw std::invalid_argument("feature_index: unknown feature \"" + name + "\"");
}

Network::Network(std::vector<std::string> airports, std::vector<Route> routes)
    : airports_(std::move(airports)), routes_(std::move(routes)) {
    const int v = airport_count();
    mask_.assign(static_cast<std::size_t>(v), std::vector<bool>(static_cast<std::size_t>(v), false));
    std::unordered_map<std::string, int> seen;
    for (std::size_t i = 0; i < routes_.size(); ++i) {
        const Route& r = routes_[i];
        if (r.src < 0 || r.src >= v || r.dst < 0 || r.dst >= v)
            throw ConfigError("route " + r.id + " references an undeclared airport");
        if (r.src == r.dst) throw ConfigError("route " + r.id + " is a self-route");
        if (!seen.emplace(r.id, static_cast<int>(i)).second)
            throw ConfigError("duplicate route id " + r.id);
        if (mask_[static_cast<std::size_t>(r.src)][static_cast<std::size_t>(r.dst)])
            throw ConfigError("duplicate route pair for " + r.id);
        mask_[static_cast<std::size_t>(r.src)][static_cast<std::size_t>(r.dst)] = true;
    }
}

int Network::airport_index(const std::string& id) const {
    for (std::size_t i = 0; i < airports_.size(); ++i)
        if (airports_[i] == id) return static_cast<int>(i);
    return -1;
}

int Network::route_index(const std::string& id) const {
    for (std::size_t i = 0; i < routes_.size(); ++i)
        if (routes_[i].id == id) return static_cast<int>(i);
    return -1;
}

int Network::route_flat_index(int i) const {
    const Route& r = route(i);
    return r.src * airport_count() + r.dst;
}

FrequencyMatrix FrequencyMatrix::from_route_frequencies(const Network& net,
                                                        const std::string& carrier,
                                                        const Eigen::VectorXd& freq) {
    if (freq.size() != net.route_count())
        throw std::invalid_argument("route frequency vector has wrong length");
    FrequencyMatrix m;
    m.carrier = carrier;
    m.values = Eigen::MatrixXd::Zero(net.airport_count(), net.airport_count());
    for (int i = 0; i < net.route_count(); ++i) {
        const Route& r = net.route(i);
        m.values(r.src, r.dst) = freq(i);
    }
    return m;
}

Eigen::VectorXd FrequencyMatrix::route_frequencies(const Network& net) const {
    Eigen::VectorXd f(net.route_count());
    for (int i = 0; i < net.route_count(); ++i) {
        const Route& r = net.route(i);
        f(i) = values(r.src, r.dst);
    }
    return f;
}

void FrequencyMatrix::validate(const Network& net) const {
    const int v = net.airport_count();
    if (values.rows() != v || values.cols() != v)
        throw std::invalid_argument("frequency matrix has wrong dimensions");
    for (int i = 0; i < v; ++i)
        for (int j = 0; j < v; ++j) {
            if (values(i, j) != 0.0 && !net.masked(i, j)) {
                std::ostringstream os;
                os << "frequency " << values(i, j) << " on non-route pair (" << i << "," << j
                   << ")";
                throw std::invalid_argument(os.str());
            }
            if (values(i, j) < 0.0) throw std::invalid_argument("negative frequency entry");
        }
}

Degrees degree_centrality(const ad::Value& a) {
    return Degrees{ad::row_sum(a), ad::col_sum(a)};
}

ad::Value ego_density(const ad::Value& a, const Network& net, int v) {
    const int n = net.airport_count();
    if (v < 0 || v >= n) throw std::invalid_argument("ego_density: invalid airport index");

    std::vector<int> hood{v};
    for (int u = 0; u < n; ++u)
        if (u != v && (net.masked(v, u) || net.masked(u, v))) hood.push_back(u);
    const int m = static_cast<int>(hood.size());
    if (m <= 1) return ad::Value::constant(0.0);

    std::vector<int> cell;
    for (int x : hood)
        for (int y : hood)
            if (x != y && net.masked(x, y)) cell.push_back(x * n + y);
    if (cell.empty()) return ad::Value::constant(0.0);

    auto total = ad::sum(ad::gather(a, cell));
    return ad::mul(total, ad::Value::constant(1.0 / (static_cast<double>(m) * (m - 1))));
}

ad::Value pagerank(const ad::Value& a, const PagerankConfig& cfg) {
    if (cfg.damping <= 0.0 || cfg.damping >= 1.0)
        throw std::invalid_argument("pagerank: damping must be in (0, 1)");
    if (cfg.iterations < 1) throw std::invalid_argument("pagerank: iterations must be >= 1");
    const Eigen::Index n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("pagerank: matrix must be square");

    auto s = ad::row_sum(a);  // Vx1

    // Dangling pattern is snapshotted from the current values; those rows
    // teleport uniformly and pass no gradient through the normalization.
    Eigen::MatrixXd dangling = Eigen::MatrixXd::Zero(n, 1);
    for (Eigen::Index i = 0; i < n; ++i)
        if (s.matrix()(i, 0) <= kDanglingThreshold) dangling(i, 0) = 1.0;

    // s_safe is s with dangling rows bumped to 1 so the division is exact
    // row normalization on live rows and a no-op (0/1) on dangling ones.
    auto s_safe = ad::add(s, ad::Value::constant(dangling));
    auto p = ad::div(a, s_safe);  // column-broadcast divide
    if (dangling.sum() > 0.0) {
        Eigen::MatrixXd uniform_rows =
            dangling * Eigen::MatrixXd::Constant(1, n, 1.0 / static_cast<double>(n));
        p = ad::add(p, ad::Value::constant(uniform_rows));
    }

    const double nd = static_cast<double>(n);
    auto teleport = ad::Value::constant(
        Eigen::MatrixXd::Constant(1, n, (1.0 - cfg.damping) / nd));
    auto damp = ad::Value::constant(cfg.damping);
    auto rank = ad::Value::constant(Eigen::MatrixXd::Constant(1, n, 1.0 / nd));
    for (int it = 0; it < cfg.iterations; ++it)
        rank = ad::add(teleport, ad::mul(damp, ad::matmul(rank, p)));
    return rank;
}

CarrierNetworkFeatures network_features(const ad::Value& a, const Network& net,
                                        const PagerankConfig& cfg) {
    CarrierNetworkFeatures nf;
    nf.degrees = degree_centrality(a);
    nf.pagerank = pagerank(a, cfg);
    nf.ego.reserve(static_cast<std::size_t>(net.airport_count()));
    for (int v = 0; v < net.airport_count(); ++v) nf.ego.push_back(ego_density(a, net, v));
    return nf;
}

ad::Value assemble_features(const ad::Value& a, const CarrierNetworkFeatures& nf,
                            const Network& net, int route_index,
                            const Eigen::VectorXd& statics) {
    if (statics.size() != kFeatureCount)
        throw std::invalid_argument("assemble_features: statics must be a 19-vector");
    const Route& r = net.route(route_index);
    const int v = net.airport_count();

    Eigen::MatrixXd static_part = Eigen::MatrixXd::Zero(kFeatureCount, 1);
    for (int i = 0; i < kFeatureCount; ++i)
        if (!is_network_feature(i)) static_part(i, 0) = statics(i);
    ad::Value feat = ad::Value::constant(static_part);

    auto place = [&feat](const ad::Value& entry, int slot) {
        const int idx[] = {slot};
        feat = ad::add(feat, ad::scatter(entry, idx, kFeatureCount, 1));
    };

    const int freq_cell[] = {r.src * v + r.dst};
    place(ad::gather(a, freq_cell), kFrequency);

    const int src[] = {r.src};
    const int dst[] = {r.dst};
    place(ad::gather(nf.degrees.in_deg, src), kInDegreeSrc);
    place(ad::gather(nf.degrees.in_deg, dst), kInDegreeDst);
    place(ad::gather(nf.degrees.out_deg, src), kOutDegreeSrc);
    place(ad::gather(nf.degrees.out_deg, dst), kOutDegreeDst);
    place(ad::gather(nf.pagerank, src), kPagerankSrc);
    place(ad::gather(nf.pagerank, dst), kPagerankDst);
    place(nf.ego[static_cast<std::size_t>(r.src)], kEgoDensitySrc);
    place(nf.ego[static_cast<std::size_t>(r.dst)], kEgoDensityDst);
    return feat;
}

}  // namespace skylift::net
