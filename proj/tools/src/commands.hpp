#pragma once

#include "config.hpp"

namespace ieq::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitWellPosedness = 3;
inline constexpr int kExitTrainingHalt = 4;

int cmd_check_init(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg, int parallel);
int cmd_grad_check(const RunConfig& cfg);

}  // namespace ieq::cli
