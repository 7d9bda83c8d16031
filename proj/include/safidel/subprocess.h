// Copyright 2026 The Safidel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAFIDEL_SUBPROCESS_H_
#define SAFIDEL_SUBPROCESS_H_

#include <sys/types.h>

#include <memory>
#include <optional>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace safidel {

// Child process running `/bin/sh -c command` with piped stdin/stdout.
// stderr is inherited.
class Subprocess {
 public:
  static absl::StatusOr<std::unique_ptr<Subprocess>> Start(
      const std::string& command);

  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  // Writes `line` plus '\n'. Not thread-safe; callers serialize writes.
  absl::Status WriteLine(const std::string& line);

  // Blocks for the next line (without '\n'); nullopt at end of stream.
  // Not thread-safe; one reader at a time.
  std::optional<std::string> ReadLine();

  void CloseStdin();

  // Closes stdin, waits up to `grace_ms` for exit, then kills the child.
  // Returns the exit status as reported by waitpid.
  int Terminate(int grace_ms = 2000);

  pid_t pid() const { return pid_; }

 private:
  Subprocess(pid_t pid, int stdin_fd, int stdout_fd)
      : pid_(pid), stdin_fd_(stdin_fd), stdout_fd_(stdout_fd) {}

  pid_t pid_;
  int stdin_fd_;
  int stdout_fd_;
  std::string buffer_;
  bool eof_ = false;
  bool reaped_ = false;
  int exit_status_ = 0;
};

}  // namespace safidel

#endif  // SAFIDEL_SUBPROCESS_H_
