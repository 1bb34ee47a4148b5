// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <vector>

#include "geossl/array.hpp"

namespace geossl {

/// Mean Earth radius in kilometers; all geodesics in this library use it.
inline constexpr double kEarthRadiusKm = 6371.0088;

/// Position on the sphere, radians. lon in [-pi, pi], lat in [-pi/2, pi/2].
struct GeoCoordinate {
    double lon = 0.0;
    double lat = 0.0;
};

/// Pairwise geodesics and the proximity mask for one batch of locations.
/// dist is symmetric with a zero diagonal; mask[i][j] = 1 iff
/// dist[i][j] <= d_max (inclusive). Consumers ignore the mask diagonal.
struct GeoBatch {
    std::vector<GeoCoordinate> coords;
    DenseArray dist;  // (K, K) kilometers
    DenseArray mask;  // (K, K) in {0, 1}
    double d_max = 0.0;

    std::size_t size() const { return coords.size(); }
};

/// Great-circle distance in kilometers on the mean-radius sphere.
double haversine(const GeoCoordinate& a, const GeoCoordinate& b);

/// Point reached by travelling distance_km along the great circle that
/// leaves `start` with the given initial bearing (radians, clockwise
/// from north). The result longitude is normalized to [-pi, pi].
GeoCoordinate geo_destination(const GeoCoordinate& start, double bearing_rad,
                              double distance_km);

GeoBatch pairwise_geo(std::vector<GeoCoordinate> coords, double d_max);

/// 1-based ascending ranks of the anchor's K-1 neighbor distances
/// (closest neighbor gets rank 1, ties broken by ascending neighbor
/// index). Entry j corresponds to neighbor j in anchor-skipping order.
std::vector<std::size_t> geo_rank(std::size_t anchor, const GeoBatch& batch);

}  // namespace geossl
