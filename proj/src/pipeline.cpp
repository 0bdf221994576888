#include "taskweave/pipeline.hpp"

#include <memory>
#include <string>
#include <utility>

#include "taskweave/access.hpp"
#include "taskweave/kernels.hpp"

namespace tw::bench {

void PipelineConfig::validate() const {
    if (B < 1 || T < 1 || C < 1 || OC < 1)
        throw ConfigError("pipeline dims must be >= 1");
    if (b_gran < 1 || t_gran < 1 || oc_split < 1)
        throw ConfigError("pipeline granularities must be >= 1");
    if (oc_split > OC)
        throw ConfigError("oc_split exceeds output channels");
}

std::int64_t PipelineConfig::num_oc_chunks() const {
    std::int64_t g = oc_gran();
    return (OC + g - 1) / g;
}

std::int64_t PipelineConfig::num_producers() const {
    return ((B + b_gran - 1) / b_gran) * ((T + t_gran - 1) / t_gran);
}

double pipeline_dout_value(std::int64_t b, std::int64_t t, std::int64_t j) {
    return 0.25 + static_cast<double>((b * 131 + t * 29 + j * 17) % 97) / 97.0;
}

double pipeline_inp_value(std::int64_t b, std::int64_t t, std::int64_t i) {
    return static_cast<double>((b * 59 + t * 43 + i * 13) % 101) / 101.0 - 0.5;
}

namespace {

struct PipelineRun {
    PipelineConfig cfg;
    std::vector<double> dout;    // [B*T*OC]
    std::vector<double> inp;     // [B*T*C]
    PipelineOutputs out;

    explicit PipelineRun(const PipelineConfig& c)
        : cfg(c),
          dout(static_cast<std::size_t>(c.B * c.T * c.OC), 0.0),
          inp(static_cast<std::size_t>(c.B * c.T * c.C), 0.0) {
        out.dbias.assign(static_cast<std::size_t>(c.OC), 0.0);
        out.dweight.assign(static_cast<std::size_t>(c.OC * c.C), 0.0);
    }
};

void fill_granule(PipelineRun& run, std::int64_t b0, std::int64_t b1,
                  std::int64_t t0, std::int64_t t1) {
    const auto& c = run.cfg;
    for (std::int64_t b = b0; b < b1; ++b)
        for (std::int64_t t = t0; t < t1; ++t) {
            double* dr = run.dout.data() + (b * c.T + t) * c.OC;
            for (std::int64_t j = 0; j < c.OC; ++j)
                dr[j] = pipeline_dout_value(b, t, j);
            double* ir = run.inp.data() + (b * c.T + t) * c.C;
            for (std::int64_t i = 0; i < c.C; ++i)
                ir[i] = pipeline_inp_value(b, t, i);
        }
}

// Bias gradient over output channels [o0, o1): the (j, b) partial is summed
// over the context dim first, matching the sequential oracle's association.
void bias_chunk(PipelineRun& run, std::int64_t o0, std::int64_t o1) {
    const auto& c = run.cfg;
    for (std::int64_t j = o0; j < o1; ++j)
        for (std::int64_t b = 0; b < c.B; ++b) {
            const double* dout_b = run.dout.data() + b * c.T * c.OC;
            double wrk = 0.0;
            for (std::int64_t t = 0; t < c.T; ++t)
                wrk += dout_b[j + t * c.OC];
            run.out.dbias[static_cast<std::size_t>(j)] += wrk;
        }
}

void gemm_chunk(PipelineRun& run, std::int64_t o0, std::int64_t o1) {
    const auto& c = run.cfg;
    for (std::int64_t j = o0; j < o1; ++j)
        for (std::int64_t k = 0; k < c.B * c.T; ++k) {
            const double wrk = run.dout[static_cast<std::size_t>(j + k * c.OC)];
            double* dw = run.out.dweight.data() + j * c.C;
            const double* in = run.inp.data() + k * c.C;
            for (std::int64_t i = 0; i < c.C; ++i)
                dw[i] += in[i] * wrk;
        }
}

std::uint64_t addr(const double* p) {
    return reinterpret_cast<std::uint64_t>(p);
}

// Producer reads for one consumer: one sentinel element per (b, t) granule
// origin, so an edge forms to whichever producer wrote that row.
deps::MultidepTemplate sentinel_reads(const PipelineRun& run, const double* base,
                                      std::int64_t row_len) {
    const auto& c = run.cfg;
    deps::MultidepTemplate m;
    m.dims = {{0, c.B, c.b_gran}, {0, c.T, c.t_gran}};
    m.coeffs = {c.T * row_len * 8, row_len * 8};
    m.offset = static_cast<std::int64_t>(addr(base));
    m.length = sizeof(double);
    m.mode = deps::AccessMode::read;
    return m;
}

double producer_cost(const PipelineConfig& c, std::int64_t rows) {
    return static_cast<double>(rows * (c.OC + c.C)) * 8.0 / kBytesPerCostUnit;
}

double bias_cost(const PipelineConfig& c, std::int64_t width) {
    return static_cast<double>(width * c.B * c.T) * 16.0 / kBytesPerCostUnit;
}

double gemm_cost(const PipelineConfig& c, std::int64_t width) {
    return static_cast<double>(width * c.B * c.T * c.C) * 16.0 / kBytesPerCostUnit;
}

PipelineOutputs run_monolithic(Runtime& rt, const PipelineConfig& cfg) {
    auto run = std::make_shared<PipelineRun>(cfg);
    TaskDef d;
    d.label = "pl_step";
    d.cost = producer_cost(cfg, cfg.B * cfg.T) + bias_cost(cfg, cfg.OC) +
             gemm_cost(cfg, cfg.OC);
    d.body = [run] {
        fill_granule(*run, 0, run->cfg.B, 0, run->cfg.T);
        bias_chunk(*run, 0, run->cfg.OC);
        gemm_chunk(*run, 0, run->cfg.OC);
    };
    rt.submit(std::move(d));
    rt.run();
    return std::move(run->out);
}

PipelineOutputs run_tasks(Runtime& rt, const PipelineConfig& cfg) {
    auto run = std::make_shared<PipelineRun>(cfg);

    for (std::int64_t b0 = 0; b0 < cfg.B; b0 += cfg.b_gran)
        for (std::int64_t t0 = 0; t0 < cfg.T; t0 += cfg.t_gran) {
            std::int64_t b1 = std::min(b0 + cfg.b_gran, cfg.B);
            std::int64_t t1 = std::min(t0 + cfg.t_gran, cfg.T);
            TaskDef d;
            d.label = "pl_fill:" + std::to_string(b0) + ":" + std::to_string(t0);
            d.cost = producer_cost(cfg, (b1 - b0) * (t1 - t0));
            deps::MultidepTemplate wd;
            wd.dims = {{b0, b1, 1}, {t0, t1, 1}};
            wd.coeffs = {cfg.T * cfg.OC * 8, cfg.OC * 8};
            wd.offset = static_cast<std::int64_t>(addr(run->dout.data()));
            wd.length = static_cast<std::uint64_t>(cfg.OC) * 8;
            wd.mode = deps::AccessMode::write;
            deps::MultidepTemplate wi = wd;
            wi.coeffs = {cfg.T * cfg.C * 8, cfg.C * 8};
            wi.offset = static_cast<std::int64_t>(addr(run->inp.data()));
            wi.length = static_cast<std::uint64_t>(cfg.C) * 8;
            for (const auto& r : deps::expand_multidep(wd)) d.accesses.push_back(r);
            for (const auto& r : deps::expand_multidep(wi)) d.accesses.push_back(r);
            d.body = [run, b0, b1, t0, t1] { fill_granule(*run, b0, b1, t0, t1); };
            rt.submit(std::move(d));
        }

    const std::int64_t g = cfg.oc_gran();
    for (std::int64_t o = 0; o < cfg.OC; o += g) {
        std::int64_t o1 = std::min(o + g, cfg.OC);
        {
            TaskDef d;
            d.label = "pl_bias:" + std::to_string(o);
            d.cost = bias_cost(cfg, o1 - o);
            d.accesses = deps::expand_multidep(
                sentinel_reads(*run, run->dout.data(), cfg.OC));
            d.accesses.push_back({addr(run->out.dbias.data() + o),
                                  static_cast<std::uint64_t>(o1 - o) * 8,
                                  deps::AccessMode::write});
            d.body = [run, o, o1] { bias_chunk(*run, o, o1); };
            rt.submit(std::move(d));
        }
        {
            TaskDef d;
            d.label = "pl_gemm:" + std::to_string(o);
            d.cost = gemm_cost(cfg, o1 - o);
            d.accesses = deps::expand_multidep(
                sentinel_reads(*run, run->dout.data(), cfg.OC));
            auto in2 = deps::expand_multidep(
                sentinel_reads(*run, run->inp.data(), cfg.C));
            d.accesses.insert(d.accesses.end(), in2.begin(), in2.end());
            d.accesses.push_back({addr(run->out.dweight.data() + o * cfg.C),
                                  static_cast<std::uint64_t>((o1 - o) * cfg.C) * 8,
                                  deps::AccessMode::write});
            d.body = [run, o, o1] { gemm_chunk(*run, o, o1); };
            rt.submit(std::move(d));
        }
    }

    rt.run();
    return std::move(run->out);
}

} // namespace

PipelineOutputs pipeline_reference(const PipelineConfig& cfg) {
    cfg.validate();
    PipelineRun run(cfg);
    fill_granule(run, 0, cfg.B, 0, cfg.T);
    bias_chunk(run, 0, cfg.OC);
    gemm_chunk(run, 0, cfg.OC);
    return std::move(run.out);
}

PipelineOutputs pipeline_step(Runtime& rt, const PipelineConfig& cfg,
                              PipelineVariant variant) {
    cfg.validate();
    return variant == PipelineVariant::monolithic ? run_monolithic(rt, cfg)
                                                  : run_tasks(rt, cfg);
}

} // namespace tw::bench
