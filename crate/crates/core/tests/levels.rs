use proptest::prelude::*;
use serde_json::{json, Value};
use vtools_core::bundled::{self, Category, CALIBRATION_HALVING_ACTION};
use vtools_core::level::{Action, LevelSpec};
use vtools_core::trajectory::TrajectoryDoc;
use vtools_core::{AttemptError, LevelError, NoiseConfig, Rejection, Vec2};

/// One known solving placement per solvable bundled level.
const SOLUTIONS: &[(&str, Action)] = &[
    ("easy_table", Action { tool: 0, position: Vec2 { x: 265.0, y: 265.0 } }),
    ("launch_ramp", Action { tool: 0, position: Vec2 { x: 245.0, y: 205.0 } }),
    ("launch_ramp_b", Action { tool: 0, position: Vec2 { x: 245.0, y: 275.0 } }),
    ("catapult", Action { tool: 0, position: Vec2 { x: 275.0, y: 295.0 } }),
    ("seesaw", Action { tool: 0, position: Vec2 { x: 145.0, y: 135.0 } }),
    ("bridge", Action { tool: 0, position: Vec2 { x: 245.0, y: 245.0 } }),
    ("prevention_a", Action { tool: 0, position: Vec2 { x: 265.0, y: 255.0 } }),
    ("prevention_b", Action { tool: 0, position: Vec2 { x: 235.0, y: 265.0 } }),
    ("falling_a", Action { tool: 0, position: Vec2 { x: 395.0, y: 185.0 } }),
    ("falling_b", Action { tool: 0, position: Vec2 { x: 395.0, y: 215.0 } }),
    ("shafts", Action { tool: 0, position: Vec2 { x: 315.0, y: 345.0 } }),
];

fn level(name: &str) -> LevelSpec {
    bundled::load(name).expect("bundled").expect("loads")
}

fn doc(name: &str) -> Value {
    serde_json::from_str(bundled::find(name).unwrap().document).unwrap()
}

fn load_value(v: &Value) -> Result<LevelSpec, LevelError> {
    LevelSpec::load(&serde_json::to_vec(v).unwrap())
}

/// A ball resting on a floor, a goal to the right, a prohibited box overhead.
fn resting_ball_doc(gap: f64) -> Value {
    let rect = |w: f64, h: f64| json!([[-w / 2.0, -h / 2.0], [w / 2.0, -h / 2.0], [w / 2.0, h / 2.0], [-w / 2.0, h / 2.0]]);
    let block = json!({"name": "block", "parts": [{"vertices": rect(20.0, 20.0)}]});
    json!({
        "format": "vtools-level/1",
        "name": "resting",
        "bounds": {"min": [0, 0], "max": [600, 600]},
        "bodies": [
            {"id": "floor", "kind": "static", "shape": {"type": "polygon", "vertices": rect(600.0, 20.0)},
             "position": [300, 10], "material": {"density": 1, "friction": 0.5, "elasticity": 0.2}},
            {"id": "ball", "kind": "dynamic", "shape": {"type": "circle", "radius": 10},
             "position": [100, 30], "material": {"density": 1, "friction": 0.5, "elasticity": 0.1}}
        ],
        "goal": {"region": [[110.0 + gap, 20], [200.0 + gap, 20], [200.0 + gap, 100], [110.0 + gap, 100]], "objects": ["ball"]},
        "prohibited": [[[300, 400], [400, 400], [400, 500], [300, 500]]],
        "tools": [block.clone(), block.clone(), block]
    })
}

#[test]
fn bundled_levels_load_with_three_tools() {
    assert!(bundled::LEVELS.len() >= 12);
    assert!(bundled::archetypes().count() >= 10);
    assert!(bundled::LEVELS.iter().filter(|l| l.category == Category::Calibration).count() >= 2);
    for b in bundled::LEVELS {
        let l = b.load().unwrap_or_else(|e| panic!("{}: {e}", b.name));
        assert_eq!(l.name, b.name);
        assert_eq!(l.tools().len(), 3);
        assert!(l.baseline_distance() > 0.0);
    }
    assert_eq!(level("launch_ramp").tools().len(), 3);
}

#[test]
fn matched_pairs_point_at_each_other() {
    for b in bundled::LEVELS {
        let l = b.load().unwrap();
        if let Some(pair) = &l.pair {
            let partner = level(&pair.partner);
            assert_eq!(partner.pair.as_ref().unwrap().partner, l.name);
            assert!(!pair.delta.is_empty());
        }
    }
}

#[test]
fn tool_count_is_enforced() {
    let mut v = resting_ball_doc(50.0);
    v["tools"].as_array_mut().unwrap().pop();
    assert_eq!(load_value(&v).unwrap_err(), LevelError::ToolCount(2));
}

#[test]
fn goal_object_starting_inside_goal_is_degenerate() {
    let mut v = resting_ball_doc(50.0);
    v["goal"]["region"] = json!([[50, 20], [150, 20], [150, 100], [50, 100]]);
    assert_eq!(load_value(&v).unwrap_err(), LevelError::GoalStartsSolved("ball".into()));
}

#[test]
fn ball_falling_into_goal_untouched_is_rejected() {
    let mut v = resting_ball_doc(50.0);
    v["bodies"][1]["position"] = json!([190, 300]);
    assert_eq!(load_value(&v).unwrap_err(), LevelError::ZeroBaseline);
}

#[test]
fn schema_errors_report_the_field_path() {
    let mut v = resting_ball_doc(50.0);
    v["bodies"][1]["position"] = json!("here");
    match load_value(&v).unwrap_err() {
        LevelError::Schema { path, .. } => assert_eq!(path, "bodies[1].position"),
        e => panic!("unexpected {e}"),
    }
    let mut v = resting_ball_doc(50.0);
    v["surprise"] = json!(1);
    assert!(matches!(load_value(&v).unwrap_err(), LevelError::Schema { .. }));
}

#[test]
fn static_ball_baseline_is_its_rest_distance() {
    for gap in [5.0, 37.5, 150.0] {
        let l = load_value(&resting_ball_doc(gap)).unwrap();
        assert!((l.baseline_distance() - gap).abs() < 1e-9, "gap {gap}: {}", l.baseline_distance());
    }
    // the ball on the pillar never moves: bottom at 200, goal top at 80
    assert!((level("easy_table").baseline_distance() - 120.0).abs() < 1e-9);
}

#[test]
fn placement_rejections_carry_the_reason() {
    let l = load_value(&resting_ball_doc(50.0)).unwrap();
    let reject = |x, y| match l.validate_action(&Action::new(0, x, y)) {
        Err(AttemptError::Rejected(r)) => Some(r),
        Ok(()) => None,
        Err(e) => panic!("{e}"),
    };
    assert_eq!(reject(350.0, 450.0), Some(Rejection::ProhibitedZone));
    assert_eq!(reject(100.0, 30.0), Some(Rejection::BodyOverlap));
    assert_eq!(reject(105.0, 45.0), Some(Rejection::BodyOverlap));
    assert_eq!(reject(5.0, 300.0), Some(Rejection::OutOfBounds));
    assert_eq!(reject(300.0, 595.0), Some(Rejection::OutOfBounds));
    assert_eq!(reject(300.0, 200.0), None);
    assert_eq!(l.validate_action(&Action::new(3, 300.0, 200.0)), Err(AttemptError::BadTool(3)));
    assert!(matches!(l.attempt(Some(&Action::new(0, 350.0, 450.0)), NoiseConfig::NONE, 0), Err(AttemptError::Rejected(Rejection::ProhibitedZone))));
}

#[test]
fn no_tool_attempt_scores_zero_everywhere() {
    for b in bundled::LEVELS {
        let l = b.load().unwrap();
        let o = l.attempt(None, NoiseConfig::NONE, 0).unwrap();
        assert_eq!(o.normalized_distance, 1.0, "{}", b.name);
        assert_eq!(o.reward, 0.0, "{}", b.name);
        assert!(!o.solved);
    }
}

#[test]
fn solving_attempts_score_one() {
    for (name, action) in SOLUTIONS {
        let o = level(name).attempt(Some(action), NoiseConfig::NONE, 0).unwrap();
        assert!(o.solved, "{name}");
        assert_eq!(o.reward, 1.0);
        assert_eq!(o.min_goal_distance, 0.0);
    }
}

/// Distance from a circle to an axis-aligned box, 0 when they touch.
fn circle_to_box(c: Vec2, r: f64, min: Vec2, max: Vec2) -> f64 {
    let dx = (min.x - c.x).max(0.0).max(c.x - max.x);
    let dy = (min.y - c.y).max(0.0).max(c.y - max.y);
    (dx.hypot(dy) - r).max(0.0)
}

/// Brute-force minimum over recorded frames of the ball-to-goal distance.
fn oracle_min_distance(l: &LevelSpec, action: Option<&Action>, radius: f64) -> f64 {
    let traj = l.attempt_recorded(action, NoiseConfig::NONE, 0).unwrap().trajectory.unwrap();
    let idx = traj.body_ids.iter().position(|id| id == "ball").unwrap();
    let v = l.goal_region().vertices();
    let min = v.iter().fold(v[0], |m, p| m.min(*p));
    let max = v.iter().fold(v[0], |m, p| m.max(*p));
    traj.frames.iter().map(|f| circle_to_box(Vec2::new(f.poses[idx].x, f.poses[idx].y), radius, min, max)).fold(f64::INFINITY, f64::min)
}

#[test]
fn calibration_reward_is_one_half() {
    let l = level("calibration_wall");
    // ball right edge at 215, goal starts at 460
    assert!((l.baseline_distance() - 245.0).abs() < 1e-9);
    let o = l.attempt(Some(&CALIBRATION_HALVING_ACTION), NoiseConfig::NONE, 0).unwrap();
    let oracle = oracle_min_distance(&l, Some(&CALIBRATION_HALVING_ACTION), 15.0);
    assert!((o.min_goal_distance - oracle).abs() < 1e-9, "{} vs oracle {oracle}", o.min_goal_distance);
    let reward = 1.0 - oracle / 245.0;
    assert!((reward - 0.5).abs() <= 0.02, "oracle reward {reward}");
    assert!((o.reward - 0.5).abs() <= 0.02, "engine reward {}", o.reward);
}

#[test]
fn catapult_baseline_matches_brute_force() {
    let l = level("catapult");
    let oracle = oracle_min_distance(&l, None, 15.0);
    assert!((l.baseline_distance() - oracle).abs() < 1e-9, "{} vs {oracle}", l.baseline_distance());
}

fn translate(v: &mut Value, d: Vec2) {
    let shift = |p: &mut Value| {
        p[0] = json!(p[0].as_f64().unwrap() + d.x);
        p[1] = json!(p[1].as_f64().unwrap() + d.y);
    };
    shift(&mut v["bounds"]["min"]);
    shift(&mut v["bounds"]["max"]);
    for b in v["bodies"].as_array_mut().unwrap() {
        shift(&mut b["position"]);
    }
    for p in v["goal"]["region"].as_array_mut().unwrap() {
        shift(p);
    }
    for zone in v["prohibited"].as_array_mut().unwrap() {
        for p in zone.as_array_mut().unwrap() {
            shift(p);
        }
    }
}

#[test]
fn goal_distance_is_translation_invariant() {
    let cases = [
        ("calibration_wall", CALIBRATION_HALVING_ACTION),
        ("catapult", Action::new(1, 320.0, 250.0)),
        ("shafts", Action::new(2, 250.0, 400.0)),
    ];
    for (name, action) in cases {
        let base = level(name);
        let o = base.attempt(Some(&action), NoiseConfig::NONE, 0).unwrap();
        // Rounding differs after a shift, and chaotic rollouts amplify it, so
        // these cases avoid knife-edge contacts. Arbitrary shifts of the metric
        // itself are covered by the geometric property below.
        for d in [Vec2::new(64.0, -32.0), Vec2::new(-16.0, 128.0)] {
            let mut v = doc(name);
            translate(&mut v, d);
            let moved = load_value(&v).unwrap();
            assert!((moved.baseline_distance() - base.baseline_distance()).abs() < 1e-6);
            let shifted = Action { tool: action.tool, position: action.position + d };
            let m = moved.attempt(Some(&shifted), NoiseConfig::NONE, 0).unwrap();
            assert!((m.min_goal_distance - o.min_goal_distance).abs() < 1e-6, "{name} {d:?}: {} vs {}", m.min_goal_distance, o.min_goal_distance);
            assert_eq!(m.solved, o.solved);
        }
    }
}

#[test]
fn recorded_attempts_are_byte_identical() {
    for name in ["catapult", "seesaw", "falling_b", "bridge", "prevention_a"] {
        let l = level(name);
        let action = SOLUTIONS.iter().find(|(n, _)| *n == name).unwrap().1;
        for noise in [NoiseConfig::NONE, NoiseConfig::new(0.2, 0.2)] {
            let run = || TrajectoryDoc::from_trajectory(&l.attempt_recorded(Some(&action), noise, 42).unwrap().trajectory.unwrap(), 1).to_json();
            assert_eq!(run(), run(), "{name}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shape_to_region_distance_ignores_translation(
        cx in 0.0..600.0f64, cy in 0.0..600.0f64, r in 1.0..40.0f64, dx in -300.0..300.0f64, dy in -300.0..300.0f64,
    ) {
        use vtools_core::geometry::{ConvexPolygon, WorldPart};
        let d = Vec2::new(dx, dy);
        let region = ConvexPolygon::new(vec![Vec2::new(200.0, 100.0), Vec2::new(400.0, 150.0), Vec2::new(300.0, 300.0)]).unwrap();
        let moved = ConvexPolygon::new(region.vertices().iter().map(|&v| v + d).collect()).unwrap();
        let ball = WorldPart::Circle { center: Vec2::new(cx, cy), radius: r };
        let ball_moved = WorldPart::Circle { center: Vec2::new(cx, cy) + d, radius: r };
        let a = ball.distance_to_polygon(&region);
        let b = ball_moved.distance_to_polygon(&moved);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn rewards_stay_in_unit_interval(idx in 0..12usize, tool in 0..3usize, x in 0.0..600.0f64, y in 0.0..600.0f64, seed in any::<u64>()) {
        let b = &bundled::LEVELS[idx % bundled::LEVELS.len()];
        let l = b.load().unwrap();
        let action = Action::new(tool, x, y);
        match l.attempt(Some(&action), NoiseConfig::new(0.2, 0.2), seed) {
            Ok(o) => {
                prop_assert!((0.0..=1.0).contains(&o.reward));
                if o.solved { prop_assert_eq!(o.reward, 1.0); }
                if o.reward == 1.0 { prop_assert_eq!(o.min_goal_distance, 0.0); }
            }
            Err(AttemptError::Rejected(_)) => prop_assert!(l.validate_action(&action).is_err()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn legal_placements_start_without_overlap(idx in 0..12usize, tool in 0..3usize, x in 0.0..600.0f64, y in 0.0..600.0f64) {
        let l = bundled::LEVELS[idx % bundled::LEVELS.len()].load().unwrap();
        let action = Action::new(tool, x, y);
        if l.validate_action(&action).is_ok() {
            let world = l.world_with(Some(&action)).unwrap();
            let tool_shape = l.tools()[tool].shape();
            let hits = world.overlap_test(tool_shape, action.position, 0.0);
            // the only overlap is the tool with itself
            prop_assert_eq!(hits.len(), 1);
        }
    }
}
