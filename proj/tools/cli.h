/*
 * Copyright 2026 The thingsyntax Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef THINGSYNTAX_TOOLS_CLI_H_
#define THINGSYNTAX_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace thingsyntax::cli {

// Runs one `thingsyntax` invocation; `args` excludes the program name.
// Returns the process exit status. Errors are printed to `err` as a single
// JSON object.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace thingsyntax::cli

#endif  // THINGSYNTAX_TOOLS_CLI_H_
