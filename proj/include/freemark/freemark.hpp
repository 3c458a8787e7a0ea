/* Copyright 2026 The FreeMark Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FREEMARK_FREEMARK_HPP
#define FREEMARK_FREEMARK_HPP

#include "freemark/attacks.hpp"
#include "freemark/binary_io.hpp"
#include "freemark/config.hpp"
#include "freemark/error.hpp"
#include "freemark/experiment.hpp"
#include "freemark/extract.hpp"
#include "freemark/host_model.hpp"
#include "freemark/keygen.hpp"
#include "freemark/numeric.hpp"
#include "freemark/registry.hpp"
#include "freemark/sha256.hpp"

#endif  // FREEMARK_FREEMARK_HPP
