// Copyright 2026 The Gaitevo Authors.
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

#include <gtest/gtest.h>

#include <sstream>

#include "gaitevo/checkpoint.hpp"
#include "gaitevo/trainer.hpp"
#include "support/small_config.hpp"

namespace gaitevo {
namespace {

TEST(Checkpoint, ByteRoundTripIsExact) {
  Checkpoint ck;
  ck.put("a", MatX(MatX::Random(3, 4)));
  ck.put("b", VecX(VecX::LinSpaced(5, -1.0, 1.0)));
  ck.put_scalar("c", std::numeric_limits<double>::denorm_min());
  ck.put_u64("d", 0xfedcba9876543210ULL);
  ck.put("e", {0}, {});
  std::istringstream is(ck.bytes());
  const Checkpoint back = Checkpoint::read(is);
  EXPECT_EQ(back, ck);
  EXPECT_EQ(back.bytes(), ck.bytes());
  EXPECT_EQ(back.u64("d"), 0xfedcba9876543210ULL);
  EXPECT_EQ(back.matrix("a"), ck.matrix("a"));
  EXPECT_EQ(ck.bytes().substr(0, 8), "GAITEVO1");
}

TEST(Checkpoint, RejectsBadMagicAndTruncation) {
  Checkpoint ck;
  ck.put("x", VecX(VecX::Ones(4)));
  std::string bytes = ck.bytes();
  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream b1(bad);
  EXPECT_THROW(Checkpoint::read(b1), Error);
  std::istringstream b2(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(Checkpoint::read(b2), Error);
  EXPECT_THROW(Checkpoint::load("/nonexistent/ck.bin"), Error);
  EXPECT_THROW(ck.get("missing"), Error);
  EXPECT_THROW(ck.put("x", {1}, {1.0}), std::invalid_argument);
  EXPECT_THROW(ck.put("y", {2}, {1.0}), std::invalid_argument);
}

TEST(Checkpoint, RngStateRoundTripContinuesStream) {
  Rng a(42);
  for (int i = 0; i < 1000; ++i) a();
  Rng b = rng_from_state(rng_state(a));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Checkpoint, TrainingStateRoundTripsThroughFile) {
  TrainConfig cfg = testing::small_config();
  cfg.max_steps = 150;
  const TrainState s = parallel_train(cfg);
  const Checkpoint ck = make_checkpoint(s);
  const auto path = ::testing::TempDir() + "/state.bin";
  ck.save(path);
  const Checkpoint back = Checkpoint::load(path);
  EXPECT_EQ(back.bytes(), ck.bytes());

  const LoadedController ctl = load_controller(back);
  EXPECT_EQ(ctl.agent.policy.params(), s.agent.policy.params());
  EXPECT_EQ(ctl.rbfn.checksum(), s.rbfn.checksum());
  EXPECT_EQ(ctl.cpg.mu, cfg.sim.cpg.mu);
  EXPECT_EQ(ctl.agent.obs_scale, s.agent.obs_scale);
  const VecX obs = VecX::Random(s.agent.obs_dim);
  EXPECT_EQ(sac::policy_mean_action(obs, ctl.agent), sac::policy_mean_action(obs, s.agent));
  EXPECT_EQ(back.scalar("counters/rl_steps"), 150.0);
  EXPECT_EQ(back.u64("counters/buffer_insertions"), s.buffer->insertions());
  Rng env0 = rng_from_state(back.get("rng/env/0").data);
  Rng live = s.env_rngs[0];
  EXPECT_EQ(env0(), live());
}

TEST(Checkpoint, CorruptPolicyShapeIsRejected) {
  TrainConfig cfg = testing::small_config();
  cfg.max_steps = 60;
  const Checkpoint good = make_checkpoint(parallel_train(cfg));
  Checkpoint ck;
  for (const NamedArray& a : good.arrays()) {
    if (a.name == "meta/hidden") {
      ck.put(a.name, {1}, {7.0});
    } else {
      ck.put(a.name, a.shape, a.data);
    }
  }
  EXPECT_THROW(load_controller(ck), Error);
}

}  // namespace
}  // namespace gaitevo
