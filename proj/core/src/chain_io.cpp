#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "iomc/mcmc.hpp"

namespace iomc {

namespace {
constexpr std::string_view kMagic = "IOCH";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_chain(const std::filesystem::path& path, const ChainRecord& record) {
    require_same_size(record.accepted.size(), record.log_lambda.size(), "write_chain");
    const ChainConfig& c = record.config;
    detail::ByteWriter w;
    w.magic(kMagic);
    w.u32(kVersion);

    w.u64(c.n_iterations);
    w.u64(c.burn_in);
    w.f64(c.beta);
    w.u64(c.seed);
    w.u8(static_cast<std::uint8_t>(c.init));
    w.u64(c.thinning);
    w.u8(c.auto_tune ? 1 : 0);
    w.f64(c.target_low);
    w.f64(c.target_high);
    w.u64(c.tune_interval);
    w.u32(static_cast<std::uint32_t>(c.initial_state.size()));
    for (double v : c.initial_state) w.f64(v);
    w.u64(record.burn_in);
    w.f64(record.step);

    const std::uint64_t n = record.log_lambda.size();
    w.u64(n);
    for (double v : record.log_lambda) w.f32(static_cast<float>(v));
    std::vector<unsigned char> bits((n + 7) / 8, 0);
    for (std::uint64_t i = 0; i < n; ++i)
        if (record.accepted[i]) bits[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
    w.bytes(bits.data(), bits.size());

    w.u32(static_cast<std::uint32_t>(record.final_state.size()));
    for (double v : record.final_state) w.f64(v);

    w.u64(record.state_trace.size());
    for (const auto& s : record.state_trace) {
        w.u32(static_cast<std::uint32_t>(s.size()));
        for (double v : s) w.f32(static_cast<float>(v));
    }
    write_file_atomic(path, w.buffer());
}

ChainRecord read_chain(const std::filesystem::path& path) {
    const std::string what = "chain " + path.string();
    detail::ByteReader r(read_file_bytes(path));
    r.expect_magic(kMagic, what);
    if (const auto v = r.u32(what); v != kVersion)
        throw FormatError(what + ": unsupported version " + std::to_string(v));

    ChainRecord rec;
    ChainConfig& c = rec.config;
    c.n_iterations = r.u64(what);
    c.burn_in = r.u64(what);
    c.beta = r.f64(what);
    c.seed = r.u64(what);
    c.init = static_cast<ChainInit>(r.u8(what));
    c.thinning = r.u64(what);
    c.auto_tune = r.u8(what) != 0;
    c.target_low = r.f64(what);
    c.target_high = r.f64(what);
    c.tune_interval = r.u64(what);
    c.initial_state.resize(r.u32(what));
    for (double& v : c.initial_state) v = r.f64(what);
    rec.burn_in = r.u64(what);
    rec.step = r.f64(what);

    const std::uint64_t n = r.u64(what);
    r.need(n * 4, what);
    rec.log_lambda.resize(n);
    for (double& v : rec.log_lambda) v = r.f32(what);
    std::vector<unsigned char> bits((n + 7) / 8);
    r.bytes(bits.data(), bits.size(), what);
    rec.accepted.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) rec.accepted[i] = (bits[i / 8] >> (i % 8)) & 1u;

    rec.final_state.resize(r.u32(what));
    for (double& v : rec.final_state) v = r.f64(what);

    const std::uint64_t snapshots = r.u64(what);
    for (std::uint64_t s = 0; s < snapshots; ++s) {
        std::vector<double> state(r.u32(what));
        for (double& v : state) v = r.f32(what);
        rec.state_trace.push_back(std::move(state));
    }
    if (!r.at_end()) throw FormatError(what + ": trailing bytes");
    return rec;
}

nlohmann::json chain_summary(const ChainRecord& record) {
    nlohmann::json j{{"n_iterations", record.size()},
                     {"burn_in", record.burn_in},
                     {"seed", record.config.seed},
                     {"step", record.step},
                     {"acceptance_rate", record.acceptance_rate()},
                     {"post_burn_in_acceptance_rate", record.post_burn_in_acceptance_rate()}};
    if (record.burn_in < record.size()) j["log_lambda_hat"] = estimate_log_likelihood_ratio(record);
    return j;
}

}  // namespace iomc
