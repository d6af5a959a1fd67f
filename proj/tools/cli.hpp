#pragma once

namespace stripefit {

/// Entry point of the `stripefit` tool. Returns 0 on success, 2 on argument
/// errors and 1 on runtime errors.
int run_cli(int argc, char** argv);

}  // namespace stripefit
