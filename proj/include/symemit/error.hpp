// Copyright 2026 The symemit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace symemit {

enum class ErrorKind {
    invalid_argument,
    config,
    infeasible,
    numerical,
    io,
};

/// Every failure raised by the library. The kind decides the CLI exit code.
class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {
    }
    ErrorKind kind() const {
        return kind_;
    }

   private:
    ErrorKind kind_;
};

inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument:
        case ErrorKind::config:
            return 2;
        case ErrorKind::infeasible:
            return 3;
        case ErrorKind::numerical:
            return 4;
        case ErrorKind::io:
            return 5;
    }
    return 1;
}

inline const char *kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument:
            return "invalid-argument";
        case ErrorKind::config:
            return "config-validation";
        case ErrorKind::infeasible:
            return "infeasible";
        case ErrorKind::numerical:
            return "numerical";
        case ErrorKind::io:
            return "io";
    }
    return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) {
    throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string &what) {
    if (!ok) {
        throw Error(kind, what);
    }
}

}  // namespace symemit
