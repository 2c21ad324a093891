// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

int main(int argc, char** argv) { return sqlpref::cli::run(argc, argv); }
