// placeholder while the library is under construction; replaced by the real
// CLI in a later commit
#include "cachenet/offline.hpp"
#include "cachenet/online.hpp"

int main() { return 0; }
