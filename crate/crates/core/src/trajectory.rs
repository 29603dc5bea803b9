//! JSON wire format for trajectories, shared by the harness and the play
//! service.
//!
//! ```json
//! {"dt": 0.01, "frame_stride": 3, "body_ids": ["ball", "tool"],
//!  "frames": [[t, x0, y0, a0, x1, y1, a1], ...]}
//! ```
//!
//! Floats are written with the shortest decimal that round-trips, so a
//! decoded document is bit-identical to the encoded frames.

use serde::{Deserialize, Serialize};

use crate::physics::{CollisionEvent, Frame, Pose, Trajectory};

pub const DEFAULT_FRAME_STRIDE: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDoc {
    pub dt: f64,
    pub frame_stride: usize,
    pub body_ids: Vec<String>,
    pub frames: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub collisions: Vec<CollisionEvent>,
}

impl TrajectoryDoc {
    /// Every `stride`-th frame, always keeping the first and the last.
    pub fn from_trajectory(traj: &Trajectory, stride: usize) -> TrajectoryDoc {
        let stride = stride.max(1);
        let last = traj.frames.len().saturating_sub(1);
        let frames = traj
            .frames
            .iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0 || *i == last)
            .map(|(_, f)| {
                let mut row = Vec::with_capacity(1 + 3 * f.poses.len());
                row.push(f.time);
                for p in &f.poses {
                    row.extend([p.x, p.y, p.angle]);
                }
                row
            })
            .collect();
        TrajectoryDoc {
            dt: traj.dt,
            frame_stride: stride,
            body_ids: traj.body_ids.clone(),
            frames,
            collisions: traj.collision_events.clone(),
        }
    }

    pub fn decode_frames(&self) -> Result<Vec<Frame>, String> {
        let width = 1 + 3 * self.body_ids.len();
        self.frames
            .iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != width {
                    return Err(format!("frame {i} has {} values, expected {width}", row.len()));
                }
                Ok(Frame {
                    time: row[0],
                    poses: row[1..].chunks(3).map(|c| Pose { x: c[0], y: c[1], angle: c[2] }).collect(),
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<TrajectoryDoc, serde_json::Error> {
        serde_json::from_str(s)
    }
}
