#pragma once

namespace sd::cli {

/// Entry point of the sobolev-descent tool. Exit codes: 0 success, 2 usage or
/// parameter error, 3 I/O error, 4 numerical failure or divergence.
int main(int argc, char** argv);

}  // namespace sd::cli
