#pragma once

#include <string>

#include "config.hpp"

namespace cavlev::cli {

struct RunContext {
    Config config;
    std::string out_dir = ".";
    unsigned threads = 0;
    bool plots = true;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitNumerical = 2;

int run_scan(const RunContext& ctx);
int run_report(const RunContext& ctx);
int run_quartic(const RunContext& ctx);
int run_mech_sweep(const RunContext& ctx);
int run_tm1d_map(const RunContext& ctx);

} // namespace cavlev::cli
