#pragma once

namespace oscidecay {

/// Cap the OpenMP worker count; n <= 0 leaves the runtime default.
void set_threads(int n);

int max_threads();

}  // namespace oscidecay
