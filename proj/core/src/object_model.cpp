#include "iomc/object_model.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace iomc {

void LumpyModelParams::validate() const {
    if (!(mean_lumps > 0.0)) throw std::invalid_argument("lumpy model: mean_lumps must be > 0");
    if (!(width > 0.0)) throw std::invalid_argument("lumpy model: width must be > 0");
    if (!fov.valid()) throw std::invalid_argument("lumpy model: field of view must be at least 1x1");
}

void GaussianSignal::validate() const {
    if (!(width > 0.0)) throw std::invalid_argument("signal: width must be > 0");
}

LumpyRealization sample_lumpy_realization(const LumpyModelParams& params, Rng& rng) {
    params.validate();
    std::size_t count = 0;
    if (params.fixed_count) {
        count = *params.fixed_count;
    } else {
        std::poisson_distribution<long> poisson(params.mean_lumps);
        count = static_cast<std::size_t>(poisson(rng));
    }
    std::uniform_real_distribution<double> ux(0.0, params.fov.width);
    std::uniform_real_distribution<double> uy(0.0, params.fov.height);

    LumpyRealization out;
    out.amplitude = params.amplitude;
    out.width = params.width;
    out.fov = params.fov;
    out.centers.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Point2 p{ux(rng), uy(rng)};
        // generate_canonical may round up to the upper bound
        while (!params.contains(p)) p = {ux(rng), uy(rng)};
        out.centers.push_back(p);
    }
    return out;
}

double eval_object_field(const LumpyRealization& realization, Point2 point) {
    const double inv = 1.0 / (2.0 * realization.width * realization.width);
    double sum = 0.0;
    for (const Point2& c : realization.centers) sum += std::exp(-squared_distance(point, c) * inv);
    return realization.amplitude * sum;
}

double eval_signal_field(const GaussianSignal& signal, Point2 point) {
    const double inv = 1.0 / (2.0 * signal.width * signal.width);
    return signal.amplitude * std::exp(-squared_distance(point, signal.center) * inv);
}

void to_json(nlohmann::json& j, const LumpyRealization& r) {
    auto centers = nlohmann::json::array();
    for (const Point2& c : r.centers) centers.push_back({c.x, c.y});
    j = nlohmann::json{{"centers", centers},
                       {"a", r.amplitude},
                       {"w_b", r.width},
                       {"fov", {r.fov.width, r.fov.height}}};
}

void from_json(const nlohmann::json& j, LumpyRealization& r) {
    r.centers.clear();
    for (const auto& c : j.at("centers")) r.centers.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    r.amplitude = j.at("a").get<double>();
    r.width = j.at("w_b").get<double>();
    r.fov = {j.at("fov").at(0).get<int>(), j.at("fov").at(1).get<int>()};
}

void to_json(nlohmann::json& j, const LumpyModelParams& p) {
    j = nlohmann::json{{"mean_lumps", p.mean_lumps},
                       {"amplitude", p.amplitude},
                       {"width", p.width},
                       {"fov", {p.fov.width, p.fov.height}}};
    if (p.fixed_count) j["fixed_count"] = *p.fixed_count;
}

void from_json(const nlohmann::json& j, LumpyModelParams& p) {
    p = LumpyModelParams{};
    p.mean_lumps = j.value("mean_lumps", p.mean_lumps);
    p.amplitude = j.value("amplitude", p.amplitude);
    p.width = j.value("width", p.width);
    if (j.contains("fov")) p.fov = {j["fov"].at(0).get<int>(), j["fov"].at(1).get<int>()};
    if (j.contains("fixed_count") && !j["fixed_count"].is_null())
        p.fixed_count = j["fixed_count"].get<std::size_t>();
}

void to_json(nlohmann::json& j, const GaussianSignal& s) {
    j = nlohmann::json{{"amplitude", s.amplitude}, {"width", s.width}, {"center", {s.center.x, s.center.y}}};
}

void from_json(const nlohmann::json& j, GaussianSignal& s) {
    s = GaussianSignal{};
    s.amplitude = j.value("amplitude", s.amplitude);
    s.width = j.value("width", s.width);
    if (j.contains("center")) s.center = {j["center"].at(0).get<double>(), j["center"].at(1).get<double>()};
}

}  // namespace iomc
