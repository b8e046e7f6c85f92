use serde::{Deserialize, Serialize};

use super::Clip;
use crate::error::{Error, Result};

/// Minimum grouped clip duration in seconds.
pub const MIN_CLIP_SECONDS: f64 = 12.0;

const CONTIGUITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotInterval {
    pub start_s: f64,
    pub end_s: f64,
}

impl ShotInterval {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Self { start_s, end_s }
    }
}

/// One detected shot as ingested from a shot-boundary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub video_id: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// Greedily merges consecutive shots of one video until each clip reaches
/// `min_duration`. A trailing remainder shorter than the threshold becomes
/// the final clip instead of being dropped.
pub fn group_shots(video_id: &str, intervals: &[ShotInterval], min_duration: f64) -> Result<Vec<Clip>> {
    let Some(first) = intervals.first() else {
        return Ok(Vec::new());
    };
    for (i, iv) in intervals.iter().enumerate() {
        if !(iv.start_s >= 0.0 && iv.end_s > iv.start_s && iv.end_s.is_finite()) {
            return Err(Error::validation(format!(
                "video {video_id:?}: shot {i} has invalid span [{}, {}]",
                iv.start_s, iv.end_s
            )));
        }
        if i > 0 {
            let prev_end = intervals[i - 1].end_s;
            if (iv.start_s - prev_end).abs() > CONTIGUITY_TOLERANCE {
                return Err(Error::validation(format!(
                    "video {video_id:?}: shots are not contiguous, gap between {prev_end} and {} at shot {i}",
                    iv.start_s
                )));
            }
        }
    }

    let make = |n: usize, start: f64, end: f64| Clip::new(format!("{video_id}_c{n:04}"), video_id, start, end);
    let mut clips = Vec::new();
    let mut open_start = first.start_s;
    let mut open = false;
    for iv in intervals {
        open = true;
        if iv.end_s - open_start >= min_duration {
            clips.push(make(clips.len(), open_start, iv.end_s));
            open_start = iv.end_s;
            open = false;
        }
    }
    if open {
        let end = intervals[intervals.len() - 1].end_s;
        clips.push(make(clips.len(), open_start, end));
    }
    Ok(clips)
}

/// Groups shot records per video. Videos keep first-appearance order and
/// each video's shots must already be sorted by start time.
pub fn group_shot_records(records: &[ShotRecord], min_duration: f64) -> Result<Vec<Clip>> {
    let mut order: Vec<&str> = Vec::new();
    let mut per_video: std::collections::HashMap<&str, Vec<ShotInterval>> = Default::default();
    for r in records {
        let entry = per_video.entry(r.video_id.as_str()).or_insert_with(|| {
            order.push(r.video_id.as_str());
            Vec::new()
        });
        entry.push(ShotInterval::new(r.start_s, r.end_s));
    }
    let mut clips = Vec::new();
    for video in order {
        clips.extend(group_shots(video, &per_video[video], min_duration)?);
    }
    Ok(clips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spans(clips: &[Clip]) -> Vec<(f64, f64)> {
        clips.iter().map(|c| (c.start_s, c.end_s)).collect()
    }

    fn ivs(pairs: &[(f64, f64)]) -> Vec<ShotInterval> {
        pairs.iter().map(|&(a, b)| ShotInterval::new(a, b)).collect()
    }

    #[test]
    fn worked_example() {
        let clips = group_shots("v", &ivs(&[(0., 5.), (5., 9.), (9., 14.), (14., 30.)]), 12.0).unwrap();
        assert_eq!(spans(&clips), vec![(0., 14.), (14., 30.)]);
        assert_eq!(clips[0].clip_id, "v_c0000");
    }

    #[test]
    fn single_long_shot() {
        let clips = group_shots("v", &ivs(&[(0., 20.)]), 12.0).unwrap();
        assert_eq!(spans(&clips), vec![(0., 20.)]);
    }

    #[test]
    fn short_remainder_is_kept() {
        let clips = group_shots("v", &ivs(&[(0., 4.), (4., 8.)]), 12.0).unwrap();
        assert_eq!(spans(&clips), vec![(0., 8.)]);
    }

    #[test]
    fn empty_input_is_empty_output() {
        assert!(group_shots("v", &[], 12.0).unwrap().is_empty());
    }

    #[test]
    fn gap_is_reported() {
        let err = group_shots("v", &ivs(&[(0., 5.), (6., 20.)]), 12.0).unwrap_err();
        assert!(err.to_string().contains("gap between 5 and 6"), "{err}");
    }

    #[test]
    fn records_are_grouped_per_video() {
        let recs = vec![
            ShotRecord { video_id: "a".into(), start_s: 0.0, end_s: 13.0 },
            ShotRecord { video_id: "b".into(), start_s: 0.0, end_s: 3.0 },
            ShotRecord { video_id: "a".into(), start_s: 13.0, end_s: 15.0 },
        ];
        let clips = group_shot_records(&recs, 12.0).unwrap();
        let ids: Vec<_> = clips.iter().map(|c| c.clip_id.as_str()).collect();
        assert_eq!(ids, vec!["a_c0000", "a_c0001", "b_c0000"]);
    }

    proptest! {
        #[test]
        fn grouping_covers_input_and_respects_threshold(durations in prop::collection::vec(0.5f64..20.0, 1..40)) {
            let mut t = 0.0;
            let input: Vec<ShotInterval> = durations.iter().map(|d| {
                let iv = ShotInterval::new(t, t + d);
                t += d;
                iv
            }).collect();
            let clips = group_shots("v", &input, MIN_CLIP_SECONDS).unwrap();
            prop_assert_eq!(clips[0].start_s, input[0].start_s);
            prop_assert_eq!(clips.last().unwrap().end_s, input.last().unwrap().end_s);
            for w in clips.windows(2) {
                prop_assert_eq!(w[0].end_s, w[1].start_s);
            }
            for c in &clips[..clips.len() - 1] {
                prop_assert!(c.duration() >= MIN_CLIP_SECONDS);
            }
            // every clip boundary is an input boundary
            for c in &clips {
                prop_assert!(input.iter().any(|iv| iv.end_s == c.end_s));
            }
        }
    }
}
