#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace aigenc;

namespace {

EnvAction act(ActionKind k, std::optional<int> target = std::nullopt) { return EnvAction{k, target, {}}; }

StepResult walk_to(WorldState s, Position p) {
  StepResult r{s, 0.0, false};
  while (r.state.agent.x < p.x) r = step(r.state, act(ActionKind::east));
  while (r.state.agent.x > p.x) r = step(r.state, act(ActionKind::west));
  return r;
}

}  // namespace

TEST(Reset, Deterministic) {
  EXPECT_EQ(reset(Task::BaseKeyDoor, 7), reset(Task::BaseKeyDoor, 7));
  EXPECT_EQ(reset(Task::ImpasseTool, 3).step, 0);
}

TEST(Reset, TransferSharesTopologyButNotKeyFeatures) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const WorldState base = reset(Task::BaseKeyDoor, seed);
    const WorldState tr = reset(Task::TransferKeyDoor, seed);
    EXPECT_EQ(base.walls, tr.walls);
    EXPECT_EQ(base.agent, tr.agent);
    EXPECT_EQ(base.goal, tr.goal);
    ASSERT_EQ(base.objects.size(), tr.objects.size());
    const WorldObject& k0 = base.objects[0];
    const WorldObject& k1 = tr.objects[0];
    EXPECT_EQ(k0.pos, k1.pos);
    EXPECT_NE(k0.kind, k1.kind);
    EXPECT_NE(k0.color, k1.color);
    EXPECT_NE(k0.size, k1.size);
    EXPECT_TRUE(opens_doors(k1.kind));
    EXPECT_EQ(base.objects[1], tr.objects[1]);
  }
}

TEST(Reset, ImpasseHasNoKeyButStickAndHook) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const WorldState s = reset(Task::ImpasseTool, seed);
    bool stick = false, hook = false;
    for (const auto& o : s.objects) {
      EXPECT_FALSE(opens_doors(o.kind));
      stick |= o.kind == ObjectKind::stick;
      hook |= o.kind == ObjectKind::hook;
    }
    EXPECT_TRUE(stick);
    EXPECT_TRUE(hook);
  }
}

TEST(Reset, UnknownTaskRejected) {
  EXPECT_THROW(task_from_string("Maze"), std::invalid_argument);
  EXPECT_THROW(reset(Task::Custom, 0), std::invalid_argument);
}

TEST(Step, WaitCostsAStep) {
  const WorldState s = reset(Task::BaseKeyDoor, 1);
  const StepResult r = step(s, act(ActionKind::wait));
  EXPECT_EQ(r.state.objects, s.objects);
  EXPECT_EQ(r.state.agent, s.agent);
  EXPECT_DOUBLE_EQ(r.reward, -0.01);
  EXPECT_FALSE(r.done);
  EXPECT_EQ(r.state.step, 1);
}

TEST(Step, ScriptedKeyDoorTrace) {
  const WorldState s = reset(Task::BaseKeyDoor, 4);
  const WorldObject door = s.objects[1];
  StepResult r = step(s, act(ActionKind::pickup, 0));
  ASSERT_TRUE(r.state.objects[0].held);
  r = walk_to(r.state, {door.pos.x - 1, door.pos.y});
  EXPECT_FALSE(r.state.objects[1].open);
  r = step(r.state, act(ActionKind::use_on, door.id));
  EXPECT_TRUE(r.state.objects[1].open);
  EXPECT_DOUBLE_EQ(r.reward, -0.01);
  r = walk_to(r.state, s.goal);
  EXPECT_DOUBLE_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(r.state.goal_reached);
  EXPECT_THROW(step(r.state, act(ActionKind::wait)), std::logic_error);
}

TEST(Step, ClosedDoorBlocksAndStickDoesNotOpen) {
  const WorldState s = reset(Task::ImpasseTool, 2);
  StepResult r = step(s, act(ActionKind::pickup, 0));
  ASSERT_TRUE(r.state.objects[0].held);
  r = walk_to(r.state, {s.objects[1].pos.x - 1, s.agent.y});
  r = step(r.state, act(ActionKind::use_on, 1));
  EXPECT_FALSE(r.state.objects[1].open);
  r = step(r.state, act(ActionKind::east));
  EXPECT_EQ(r.state.agent.x, s.objects[1].pos.x - 1);
}

TEST(Step, NearKeyTokenOpensDoor) {
  EnvConfig cfg;
  cfg.key_prototype = SymbolicEncoder().key_prototype();
  const WorldState s = reset(Task::ImpasseTool, 2, cfg);
  StepResult r = walk_to(s, {s.objects[1].pos.x - 1, s.agent.y});
  EnvAction far = act(ActionKind::use_on, 1);
  FeatureVector off = cfg.key_prototype;
  off[0] += 2.0;
  far.tokens.push_back(off);
  EXPECT_FALSE(step(r.state, far, cfg).state.objects[1].open);
  EnvAction near = act(ActionKind::use_on, 1);
  FeatureVector close = cfg.key_prototype;
  close[3] += 0.5;
  near.tokens.push_back(close);
  EXPECT_TRUE(step(r.state, near, cfg).state.objects[1].open);
}

TEST(Step, UseOnAbsentTargetIsPenalisedNoOp) {
  const WorldState s = reset(Task::BaseKeyDoor, 0);
  for (auto target : {std::optional<int>{}, std::optional<int>{42}}) {
    const StepResult r = step(s, act(ActionKind::use_on, target));
    EXPECT_EQ(r.state.objects, s.objects);
    EXPECT_DOUBLE_EQ(r.reward, -0.01);
  }
}

TEST(Step, RandomWalksRespectBoundsAndCap) {
  std::mt19937_64 rng(99);
  EnvConfig cfg;
  cfg.max_steps = 40;
  for (int ep = 0; ep < 100; ++ep) {
    WorldState s = reset(static_cast<Task>(ep % 3), static_cast<std::uint64_t>(ep), cfg);
    int steps = 0;
    while (!s.done()) {
      const auto kind = static_cast<ActionKind>(rng() % kActionKinds);
      const EnvAction a = act(kind, kind == ActionKind::use_on ? std::optional<int>(1) : std::nullopt);
      const StepResult r = step(s, a, cfg);
      EXPECT_EQ(step(s, a, cfg).state, r.state);
      EXPECT_TRUE(r.reward == -0.01 || r.reward == 1.0);
      EXPECT_FALSE(r.state.wall_at(r.state.agent));
      s = r.state;
      ++steps;
    }
    EXPECT_LE(steps, cfg.max_steps);
  }
}

TEST(Layout, ParsesGridCharacters) {
  const WorldState s = parse_layout(
      "; comment\n"
      "#####\n"
      "AK.DG\n"
      "#####\n",
      30);
  EXPECT_EQ(s.width, 5);
  EXPECT_EQ(s.height, 3);
  EXPECT_EQ(s.agent, (Position{0, 1}));
  EXPECT_EQ(s.goal, (Position{4, 1}));
  ASSERT_EQ(s.objects.size(), 2u);
  EXPECT_EQ(s.objects[0].kind, ObjectKind::key);
  EXPECT_EQ(s.objects[1].kind, ObjectKind::door);
  EXPECT_EQ(s.max_steps, 30);
  EXPECT_THROW(parse_layout("A.X.G\n"), std::invalid_argument);
  EXPECT_THROW(parse_layout("A..\n..\n"), std::invalid_argument);
  EXPECT_THROW(parse_layout("...\n"), std::invalid_argument);
}

TEST(Render, MarksAgentObjectsAndGoal) {
  const WorldState s = parse_layout("AK.DG\n");
  EXPECT_EQ(render(s), "@K.DG\n");
}
