#pragma once

#include <cstdint>
#include <vector>

#include "taskweave/runtime.hpp"

namespace tw::bench {

// One backward matmul step of a transformer output head: bias gradient and
// weight gradient from an upstream gradient dout[B,T,OC] and activations
// inp[B,T,C]. Weight gradient is OC-major (dweight[j*C + i]) so each output
// chunk is one contiguous block.
struct PipelineConfig {
    std::int64_t B = 4;
    std::int64_t T = 16;
    std::int64_t C = 32;
    std::int64_t OC = 64;
    // Producer granularity over the batch and context dims, consumer split
    // over output channels. Chunks that do not divide evenly are capped.
    std::int64_t b_gran = 1;
    std::int64_t t_gran = 4;
    std::int64_t oc_split = 4;

    void validate() const;
    std::int64_t oc_gran() const { return OC / oc_split; }
    std::int64_t num_oc_chunks() const;
    std::int64_t num_producers() const;
    // Producer tasks feeding each consumer task, after edge dedup.
    std::int64_t edges_per_consumer() const { return num_producers(); }
};

struct PipelineOutputs {
    std::vector<double> dbias;   // [OC]
    std::vector<double> dweight; // [OC*C], OC-major
};

// Deterministic input element values, shared by every variant.
double pipeline_dout_value(std::int64_t b, std::int64_t t, std::int64_t j);
double pipeline_inp_value(std::int64_t b, std::int64_t t, std::int64_t i);

// Sequential oracle: no runtime involved.
PipelineOutputs pipeline_reference(const PipelineConfig& cfg);

enum class PipelineVariant { monolithic, tasks };

// Runs one step on the given runtime. The tasks variant spawns one producer
// per (batch, context) granule and one bias plus one weight-gradient task per
// output-channel chunk, with consumer reads declared as per-granule
// multidependencies.
PipelineOutputs pipeline_step(Runtime& rt, const PipelineConfig& cfg,
                              PipelineVariant variant);

} // namespace tw::bench
