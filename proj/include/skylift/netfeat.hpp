//
// Copyright 2026 The Skylift Authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "skylift/autodiff.hpp"

namespace skylift::net {

// Indices into the 19-dimensional per-(route, carrier) feature vector.
// 0-10 are carrier performance features read from data; 1 and 11-18 are
// derived from the carrier's frequency matrix.
enum FeatureIndex : int {
    kPrice = 0,
    kFrequency = 1,
    kDelayRatio = 2,
    kDelayMinutes = 3,
    kCancelRatio = 4,
    kDivertRatio = 5,
    kFatalCases = 6,
    kSeriousCases = 7,
    kMinorCases = 8,
    kAircraftSize = 9,
    kSeatAvailability = 10,
    kInDegreeSrc = 11,
    kInDegreeDst = 12,
    kOutDegreeSrc = 13,
    kOutDegreeDst = 14,
    kPagerankSrc = 15,
    kPagerankDst = 16,
    kEgoDensitySrc = 17,
    kEgoDensityDst = 18,
    kFeatureCount = 19,
};

/// Indices derived from the frequency matrix (everything except the static
/// performance features).
bool is_network_feature(int index);

/// Column name used in CSV files for a feature index, and back.
const std::string& feature_name(int index);
int feature_index(const std::string& name);

struct Route {
    std::string id;
    int src = -1;
    int dst = -1;
};

/// Structural transportation network: the airport list and which ordered
/// airport pairs are routes at all. The mask is static; frequencies live in
/// a FrequencyMatrix.
class Network {
public:
    Network() = default;
    Network(std::vector<std::string> airports, std::vector<Route> routes);

    int airport_count() const { return static_cast<int>(airports_.size()); }
    int route_count() const { return static_cast<int>(routes_.size()); }
    const std::vector<std::string>& airports() const { return airports_; }
    const std::vector<Route>& routes() const { return routes_; }
    const Route& route(int i) const { return routes_[static_cast<std::size_t>(i)]; }
    bool masked(int src, int dst) const { return mask_[static_cast<std::size_t>(src)][static_cast<std::size_t>(dst)]; }
    const std::vector<std::vector<bool>>& mask() const { return mask_; }

    int airport_index(const std::string& id) const;  // -1 when unknown
    int route_index(const std::string& id) const;    // -1 when unknown

    /// Row-major flat index of route i's (src, dst) cell in a VxV matrix.
    int route_flat_index(int i) const;

private:
    std::vector<std::string> airports_;
    std::vector<Route> routes_;
    std::vector<std::vector<bool>> mask_;
};

/// Per-carrier weighted adjacency matrix of monthly flight counts; the
/// decision variable of the optimization. Entries must be zero off the
/// structural mask.
struct FrequencyMatrix {
    std::string carrier;
    Eigen::MatrixXd values;  // VxV, non-negative

    static FrequencyMatrix from_route_frequencies(const Network& net, const std::string& carrier,
                                                  const Eigen::VectorXd& freq);
    Eigen::VectorXd route_frequencies(const Network& net) const;
    void validate(const Network& net) const;
};

struct PagerankConfig {
    double damping = 0.85;
    int iterations = 50;
};

/// Out-degree is the row sum, in-degree the column sum. Differentiable.
struct Degrees {
    ad::Value out_deg;  // Vx1
    ad::Value in_deg;   // 1xV
};
Degrees degree_centrality(const ad::Value& a);

/// Density of the ego network of airport v: the sum of present edge weights
/// among v and its structural neighbours divided by n(n-1). An isolated
/// airport has density 0. The neighbourhood is defined by the static mask,
/// not by which frequencies happen to be nonzero, so the value stays smooth
/// in the frequency matrix.
ad::Value ego_density(const ad::Value& a, const Network& net, int v);

/// Power iteration from a uniform start, unrolled `iterations` times.
/// Rows are normalized to transition probabilities; rows with (numerically)
/// zero total frequency teleport uniformly. Returns a 1xV distribution.
ad::Value pagerank(const ad::Value& a, const PagerankConfig& cfg);

/// Everything derived from one carrier's frequency matrix, computed once
/// and shared by all route feature assemblies.
struct CarrierNetworkFeatures {
    Degrees degrees;
    ad::Value pagerank;           // 1xV
    std::vector<ad::Value> ego;   // per airport, 1x1
};
CarrierNetworkFeatures network_features(const ad::Value& a, const Network& net,
                                        const PagerankConfig& cfg);

/// Builds the 19-dimensional feature vector for (route, carrier): the
/// static entries come from `statics` (a 19-vector whose network slots are
/// ignored), the frequency entry is read from the matrix, and the network
/// entries from `nf`. Result is a 19x1 value, differentiable in `a`.
ad::Value assemble_features(const ad::Value& a, const CarrierNetworkFeatures& nf,
                            const Network& net, int route_index,
                            const Eigen::VectorXd& statics);

}  // namespace skylift::net
