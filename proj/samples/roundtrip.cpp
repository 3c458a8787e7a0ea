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

// Library round trip: train a host, derive keys, check a suspect.

#include <iostream>

#include "freemark/freemark.hpp"

int main() {
  using namespace freemark;

  DatasetSpec task;
  Dataset data = generate_synthetic_dataset(task);
  ModelCheckpoint host = train(ModelSpec{}, data, Hyper{}).model;

  Rng rng(2026);
  Rng trigger_rng = rng.split(0);
  TriggerSet trigger = select_trigger_set(data, 10, trigger_rng);
  Rng wm_rng = rng.split(1);
  WatermarkVector b = WatermarkVector::random(wm_rng, 512);

  KeyGenConfig cfg;
  cfg.seed = 17;
  KeyGenOutcome out = generate_keys(host, trigger, 1, b, cfg);

  BerReport own = verify(b, extract(host, trigger, out.keys), 0.25);
  std::cout << "host:      BER " << own.ber << " -> " << to_string(own.verdict) << "\n";

  Hyper other;
  other.seed = 99;
  ModelCheckpoint unrelated = train(ModelSpec{}, data, other).model;
  BerReport theirs = verify(b, extract(unrelated, trigger, out.keys), 0.25);
  std::cout << "unrelated: BER " << theirs.ber << " -> " << to_string(theirs.verdict) << "\n";

  std::cout << "host fingerprint unchanged: " << std::boolalpha << (host.fingerprint() == out.model_fingerprint)
            << "\n";
}
