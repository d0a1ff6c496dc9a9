#include "snr/cli.h"

int main(int argc, char** argv) { return snr::run_command(argc, argv); }
