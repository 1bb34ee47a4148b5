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

#include "geossl/geo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geossl/softrank.hpp"

namespace geossl {

double haversine(const GeoCoordinate& a, const GeoCoordinate& b) {
    if (!std::isfinite(a.lon) || !std::isfinite(a.lat) || !std::isfinite(b.lon) ||
        !std::isfinite(b.lat)) {
        throw std::invalid_argument("haversine: non-finite coordinate");
    }
    const double sin_dlat = std::sin((b.lat - a.lat) * 0.5);
    const double sin_dlon = std::sin((b.lon - a.lon) * 0.5);
    const double h = sin_dlat * sin_dlat + std::cos(a.lat) * std::cos(b.lat) * sin_dlon * sin_dlon;
    // Clamp guards rounding above 1 for near-antipodal pairs.
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

GeoCoordinate geo_destination(const GeoCoordinate& start, double bearing_rad,
                              double distance_km) {
    if (!std::isfinite(start.lon) || !std::isfinite(start.lat)
        || !std::isfinite(bearing_rad) || !std::isfinite(distance_km)
        || distance_km < 0.0) {
        throw std::invalid_argument("geo_destination: bad arguments");
    }
    const double delta = distance_km / kEarthRadiusKm;
    const double sin_lat = std::sin(start.lat) * std::cos(delta)
                           + std::cos(start.lat) * std::sin(delta)
                                 * std::cos(bearing_rad);
    const double lat = std::asin(std::clamp(sin_lat, -1.0, 1.0));
    const double y = std::sin(bearing_rad) * std::sin(delta) * std::cos(start.lat);
    const double x = std::cos(delta) - std::sin(start.lat) * std::sin(lat);
    double lon = start.lon + std::atan2(y, x);
    // Wrap into [-pi, pi].
    lon = std::remainder(lon, 2.0 * std::acos(-1.0));
    return GeoCoordinate{lon, lat};
}

GeoBatch pairwise_geo(std::vector<GeoCoordinate> coords, double d_max) {
    const std::size_t k = coords.size();
    if (k < 2) throw std::invalid_argument("pairwise_geo: need at least two locations");
    if (!(d_max > 0.0)) throw std::invalid_argument("pairwise_geo: d_max must be positive");

    GeoBatch batch;
    batch.coords = std::move(coords);
    batch.d_max = d_max;
    batch.dist = DenseArray::zeros({k, k});
    batch.mask = DenseArray::zeros({k, k});
    for (std::size_t i = 0; i < k; ++i) {
        batch.mask.at(i, i) = 1.0;
        for (std::size_t j = i + 1; j < k; ++j) {
            const double d = haversine(batch.coords[i], batch.coords[j]);
            batch.dist.at(i, j) = d;
            batch.dist.at(j, i) = d;
            const double m = d <= d_max ? 1.0 : 0.0;
            batch.mask.at(i, j) = m;
            batch.mask.at(j, i) = m;
        }
    }
    return batch;
}

std::vector<std::size_t> geo_rank(std::size_t anchor, const GeoBatch& batch) {
    const std::size_t k = batch.size();
    if (anchor >= k) throw std::out_of_range("geo_rank: anchor out of range");
    std::vector<double> neighbor_dist;
    neighbor_dist.reserve(k - 1);
    for (std::size_t j = 0; j < k; ++j) {
        if (j != anchor) neighbor_dist.push_back(batch.dist.at(anchor, j));
    }
    return hard_rank(neighbor_dist, RankDirection::ascending);
}

}  // namespace geossl
