#include "cli.hpp"

int main(int argc, char** argv) { return stripefit::run_cli(argc, argv); }
