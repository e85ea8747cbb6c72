#include "chaplygin/cli_runner.hpp"

int main(int argc, char** argv) { return chaplygin::run_cli(argc, argv); }
