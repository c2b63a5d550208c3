use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub radius: f64,
}

/// A fixed PointGoal layout read from a text file.
///
/// ```text
/// # comment
/// arena.half_size = 6
/// start = -4, 0, 0.0      # x, y, heading
/// goal = 4, 1
/// obstacle = 0, 3, 0.5    # x, y, radius; may repeat
/// seed = 7
/// ```
///
/// Missing `start`/`goal` are drawn at reset. Listing any obstacle replaces
/// the random obstacle placement.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub half_size: Option<f64>,
    pub start: Option<[f64; 3]>,
    pub goal: Option<[f64; 2]>,
    pub obstacles: Vec<Obstacle>,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        fs::read_to_string(path)?.parse()
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut sc = Scenario::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Format(format!("scenario line {}: {msg}", n + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
            let value = value.trim();
            let numbers = || -> Result<Vec<f64>> {
                value
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| bad(&format!("bad number `{}`", v.trim())))
                    })
                    .collect()
            };
            match key.trim() {
                "arena.half_size" => match numbers()?[..] {
                    [h] if h > 0.0 => sc.half_size = Some(h),
                    _ => return Err(bad("half_size takes one positive number")),
                },
                "start" => match numbers()?[..] {
                    [x, y] => sc.start = Some([x, y, 0.0]),
                    [x, y, h] => sc.start = Some([x, y, h]),
                    _ => return Err(bad("start takes x, y[, heading]")),
                },
                "goal" => match numbers()?[..] {
                    [x, y] => sc.goal = Some([x, y]),
                    _ => return Err(bad("goal takes x, y")),
                },
                "obstacle" => match numbers()?[..] {
                    [x, y, r] if r > 0.0 => sc.obstacles.push(Obstacle { center: [x, y], radius: r }),
                    _ => return Err(bad("obstacle takes x, y, positive radius")),
                },
                "seed" => {
                    sc.seed = Some(value.parse().map_err(|_| bad("seed must be an unsigned integer"))?);
                }
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        Ok(sc)
    }
}
