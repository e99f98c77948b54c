//! UE movement (random waypoint at constant speed) and the chunked FTP
//! download state machine.

use crate::config::{TrafficConfig, UeState};
use crate::geo::{Bounds, Vec2};
use rand::Rng;

/// Below this waypoint distance the UE is considered to have arrived; it
/// guards the direction normalization against a zero-length leg.
const ARRIVAL_EPS_M: f64 = 1e-9;

fn draw_waypoint(bounds: &Bounds, from: Vec2, rng: &mut impl Rng) -> Vec2 {
    // Reject targets on top of the current position so the travel direction
    // is always defined. With continuous coordinates this loop effectively
    // never repeats.
    loop {
        let wp = Vec2::new(
            rng.gen_range(bounds.min.x..=bounds.max.x),
            rng.gen_range(bounds.min.y..=bounds.max.y),
        );
        if wp.dist(from) > ARRIVAL_EPS_M {
            return wp;
        }
    }
}

/// Advance one UE by `dt` seconds along its waypoint path. Arriving at the
/// waypoint (possibly mid-step) draws a fresh uniform target inside `bounds`
/// and re-aims the velocity; the speed magnitude never changes.
pub fn step_position(ue: &mut UeState, dt: f64, bounds: &Bounds, rng: &mut impl Rng) {
    assert!(dt > 0.0, "mobility step requires a positive dt");
    let mut remaining = ue.speed_mps * dt;
    while remaining > 0.0 {
        let leg = ue.waypoint - ue.position;
        let dist = leg.norm();
        if dist <= remaining {
            ue.position = ue.waypoint;
            remaining -= dist;
            ue.waypoint = draw_waypoint(bounds, ue.position, rng);
        } else {
            ue.position = ue.position + leg.scale(remaining / dist);
            break;
        }
    }
    ue.position = bounds.clamp(ue.position);
    let heading = ue.waypoint - ue.position;
    let dist = heading.norm();
    if dist > ARRIVAL_EPS_M {
        ue.velocity = heading.scale(ue.speed_mps / dist);
    }
}

/// Progress of one UE's file download: chunks still owed, the arrival time
/// of the next chunk, and the in-flight chunk's bit count.
#[derive(Debug, Clone)]
pub struct TrafficState {
    pub chunks_remaining: usize,
    /// When the next chunk becomes available for download.
    pub next_chunk_time: f64,
    /// A chunk is currently in flight.
    pub active: bool,
    chunk_bits_done: f64,
    chunk_size_bits: f64,
    chunk_interval_s: f64,
    total_bits: f64,
}

impl TrafficState {
    /// A session whose first chunk arrives at `start_time`.
    pub fn new(cfg: &TrafficConfig, start_time: f64) -> TrafficState {
        TrafficState {
            chunks_remaining: cfg.num_chunks,
            next_chunk_time: start_time,
            active: false,
            chunk_bits_done: 0.0,
            chunk_size_bits: cfg.chunk_size * 1e6,
            chunk_interval_s: cfg.chunk_interval,
            total_bits: 0.0,
        }
    }

    /// Advance to time `now`, crediting `served_bits` to the in-flight chunk.
    /// A due chunk activates first, so bits served in the same step count
    /// toward it. Completion closes the chunk at `now` and schedules the
    /// next arrival one interval later. Bits beyond the chunk size are
    /// discarded, so a finished session totals exactly the file size.
    pub fn step(&mut self, now: f64, served_bits: f64) {
        if !self.active && self.chunks_remaining > 0 && now >= self.next_chunk_time {
            self.active = true;
            self.chunk_bits_done = 0.0;
        }
        if !self.active {
            return;
        }
        let credited = served_bits.min(self.chunk_size_bits - self.chunk_bits_done);
        self.chunk_bits_done += credited;
        self.total_bits += credited;
        if self.chunk_bits_done >= self.chunk_size_bits {
            self.chunks_remaining -= 1;
            self.active = false;
            self.chunk_bits_done = 0.0;
            self.next_chunk_time = now + self.chunk_interval_s;
        }
    }

    pub fn finished(&self) -> bool {
        self.chunks_remaining == 0
    }

    pub fn total_bits(&self) -> f64 {
        self.total_bits
    }
}
