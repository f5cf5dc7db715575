#pragma once

#include <iosfwd>
#include <string>

#include "bcpanel/error.hpp"
#include "config.hpp"

namespace bcpanel::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfig = 2, kIo = 3, kData = 4, kNumerical = 5 };

int exit_code_for(ErrorKind kind);

struct CommandContext {
  std::ostream* log = nullptr;  // progress and warnings; null silences them
  bool verbose = false;
};

int cmd_fit(const RunConfig& rc, const CommandContext& ctx);
int cmd_simulate(const RunConfig& rc, const CommandContext& ctx);
int cmd_study(const RunConfig& rc, const CommandContext& ctx);
int cmd_fevd(const RunConfig& rc, const CommandContext& ctx);
int cmd_diagnose(const RunConfig& rc, const CommandContext& ctx);
int cmd_rank(const RunConfig& rc, const CommandContext& ctx);
int cmd_criteria(const RunConfig& rc, const CommandContext& ctx);

/// Dispatch by rc.command; errors propagate as bcpanel::Error.
int run_command(const RunConfig& rc, const CommandContext& ctx);

}  // namespace bcpanel::cli
