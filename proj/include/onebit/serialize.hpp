#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "onebit/sensing.hpp"

namespace onebit {

// Measurement record layout (shared by both formats):
//   n, m, d, model kind, lambda_used,
//   signs      row-major (n*m int8, +1/-1),
//   thresholds row-major (n*m doubles),
//   model entries row-major (n*d doubles), model freqs (n doubles, DCT only).
//
// Binary: magic "OBM1", little-endian; signs bit-exact, doubles bit-exact.
// JSON: same fields; doubles round-trip exactly through the serializer.

namespace detail {

template <typename T>
void write_raw(std::ostream& os, const T& value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw std::runtime_error("measurement record: truncated stream");
    return value;
}

}  // namespace detail

inline void save_measurements_binary(const OneBitMeasurements& meas, std::ostream& os) {
    const char magic[4] = {'O', 'B', 'M', '1'};
    os.write(magic, 4);
    detail::write_raw<std::int64_t>(os, meas.n());
    detail::write_raw<std::int64_t>(os, meas.m());
    detail::write_raw<std::int64_t>(os, meas.model.cols());
    detail::write_raw<std::int32_t>(os, static_cast<std::int32_t>(meas.model.kind));
    detail::write_raw<double>(os, meas.lambda_used);
    for (Index j = 0; j < meas.n(); ++j)
        for (Index l = 0; l < meas.m(); ++l)
            detail::write_raw<std::int8_t>(os, static_cast<std::int8_t>(meas.signs(j, l)));
    for (Index j = 0; j < meas.n(); ++j)
        for (Index l = 0; l < meas.m(); ++l)
            detail::write_raw<double>(os, meas.thresholds(j, l));
    for (Index j = 0; j < meas.n(); ++j)
        for (Index t = 0; t < meas.model.cols(); ++t)
            detail::write_raw<double>(os, meas.model.entries(j, t));
    if (meas.model.kind == ModelKind::DctRandomFreq)
        for (double f : meas.model.freqs) detail::write_raw<double>(os, f);
}

inline OneBitMeasurements load_measurements_binary(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || magic[0] != 'O' || magic[1] != 'B' || magic[2] != 'M' || magic[3] != '1')
        throw std::runtime_error("measurement record: bad magic");
    const auto n = detail::read_raw<std::int64_t>(is);
    const auto m = detail::read_raw<std::int64_t>(is);
    const auto d = detail::read_raw<std::int64_t>(is);
    const auto kind = static_cast<ModelKind>(detail::read_raw<std::int32_t>(is));
    OneBitMeasurements meas;
    meas.lambda_used = detail::read_raw<double>(is);
    meas.signs.resize(n, m);
    meas.thresholds.resize(n, m);
    meas.model.kind = kind;
    meas.model.entries.resize(n, d);
    for (Index j = 0; j < n; ++j)
        for (Index l = 0; l < m; ++l)
            meas.signs(j, l) = detail::read_raw<std::int8_t>(is);
    for (Index j = 0; j < n; ++j)
        for (Index l = 0; l < m; ++l)
            meas.thresholds(j, l) = detail::read_raw<double>(is);
    for (Index j = 0; j < n; ++j)
        for (Index t = 0; t < d; ++t)
            meas.model.entries(j, t) = detail::read_raw<double>(is);
    if (kind == ModelKind::DctRandomFreq) {
        meas.model.freqs.resize(static_cast<std::size_t>(n));
        for (auto& f : meas.model.freqs) f = detail::read_raw<double>(is);
    }
    return meas;
}

inline nlohmann::json measurements_to_json(const OneBitMeasurements& meas) {
    nlohmann::json j;
    j["n"] = meas.n();
    j["m"] = meas.m();
    j["d"] = meas.model.cols();
    j["model_kind"] = static_cast<int>(meas.model.kind);
    j["lambda_used"] = meas.lambda_used;
    std::vector<int> signs;
    signs.reserve(static_cast<std::size_t>(meas.total()));
    std::vector<double> thresholds;
    thresholds.reserve(static_cast<std::size_t>(meas.total()));
    for (Index jj = 0; jj < meas.n(); ++jj)
        for (Index l = 0; l < meas.m(); ++l) {
            signs.push_back(meas.signs(jj, l));
            thresholds.push_back(meas.thresholds(jj, l));
        }
    j["signs"] = std::move(signs);
    j["thresholds"] = std::move(thresholds);
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(meas.n() * meas.model.cols()));
    for (Index jj = 0; jj < meas.n(); ++jj)
        for (Index t = 0; t < meas.model.cols(); ++t) entries.push_back(meas.model.entries(jj, t));
    j["model_entries"] = std::move(entries);
    if (meas.model.kind == ModelKind::DctRandomFreq) j["model_freqs"] = meas.model.freqs;
    return j;
}

inline OneBitMeasurements measurements_from_json(const nlohmann::json& j) {
    OneBitMeasurements meas;
    const Index n = j.at("n").get<Index>();
    const Index m = j.at("m").get<Index>();
    const Index d = j.at("d").get<Index>();
    meas.model.kind = static_cast<ModelKind>(j.at("model_kind").get<int>());
    meas.lambda_used = j.at("lambda_used").get<double>();
    meas.signs.resize(n, m);
    meas.thresholds.resize(n, m);
    meas.model.entries.resize(n, d);
    const auto& signs = j.at("signs");
    const auto& thresholds = j.at("thresholds");
    std::size_t pos = 0;
    for (Index jj = 0; jj < n; ++jj)
        for (Index l = 0; l < m; ++l, ++pos) {
            meas.signs(jj, l) = signs.at(pos).get<int>();
            meas.thresholds(jj, l) = thresholds.at(pos).get<double>();
        }
    const auto& entries = j.at("model_entries");
    pos = 0;
    for (Index jj = 0; jj < n; ++jj)
        for (Index t = 0; t < d; ++t, ++pos) meas.model.entries(jj, t) = entries.at(pos).get<double>();
    if (j.contains("model_freqs")) meas.model.freqs = j.at("model_freqs").get<std::vector<double>>();
    return meas;
}

/// Format picked by extension: ".json" or anything else (binary).
inline void save_measurements(const OneBitMeasurements& meas, const std::string& path) {
    const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    std::ofstream os(path, json ? std::ios::out : std::ios::binary);
    if (!os) throw std::runtime_error("save_measurements: cannot open " + path);
    if (json)
        os << measurements_to_json(meas).dump();
    else
        save_measurements_binary(meas, os);
}

inline OneBitMeasurements load_measurements(const std::string& path) {
    const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    std::ifstream is(path, json ? std::ios::in : std::ios::binary);
    if (!is) throw std::runtime_error("load_measurements: cannot open " + path);
    if (json) {
        nlohmann::json j;
        is >> j;
        return measurements_from_json(j);
    }
    return load_measurements_binary(is);
}

}  // namespace onebit
