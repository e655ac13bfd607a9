#pragma once

#include <string>

#include "tps/config.hpp"

namespace tps {

// One pipeline stage; each reads/writes files under `out` per docs/config.md.
// `pipeline` chains them end to end. All return normally or throw.
void run_simulate(const Config& cfg, const std::string& out);
void run_extract(const Config& cfg, const std::string& out);
void run_synth(const Config& cfg, const std::string& out);
void run_train(const Config& cfg, const std::string& out);
void run_infer(const Config& cfg, const std::string& out);
void run_mine(const Config& cfg, const std::string& out);
void run_eval(const Config& cfg, const std::string& out);
void run_pipeline(const Config& cfg, const std::string& out);
void run_bench(const Config& cfg, const std::string& out);

// Dispatch by name; unknown command is a config error.
void run_command(const std::string& command, const Config& cfg, const std::string& out);

}  // namespace tps
