#include "forum/harness/cli.hpp"

int main(int argc, char** argv) { return forum::cli_main(argc, argv); }
