#include <malloc.h>

#include "edgehyb/cli.hpp"

int main(int argc, char** argv) {
    // keep large tensor buffers in the heap instead of fresh mmaps per allocation
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 256 << 20);
    return edgehyb::run_cli(argc, argv);
}
