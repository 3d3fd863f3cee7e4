#pragma once

namespace tem::parallel {

// Runtime switch for the OpenMP stage kernels. The serial path is the
// reference implementation; tests assert both produce bit-identical output.
void set_max_threads(int n); // 0 = hardware default, 1 = serial reference
int max_threads();
bool enabled();

} // namespace tem::parallel
