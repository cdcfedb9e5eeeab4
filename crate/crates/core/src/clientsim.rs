//! Simulated DASH clients: request schedule, playout buffer, start-up delay
//! and stalls.
//!
//! Clients do no adaptation of their own. A client asks for the next
//! segment as soon as the previous one has arrived, and plays whatever
//! layer prefix it was given.

use std::io::Write;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rate::{self, Rational};
use crate::slot::{ClientProfile, Request, RequestIds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    WaitingFirstSegment,
    Playing,
    Stalled,
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Buffered {
    pub segment: usize,
    pub layers: usize,
    pub arrival: Rational,
}

/// Completed delivery of one request.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryEvent {
    pub request: u64,
    pub completion: Rational,
    pub layers: usize,
    /// Completion is later than optimization start + θ.
    pub extended: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Request,
    ZeroGrant,
    Delivered,
    Startup,
    StallStart,
    StallEnd,
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientEvent {
    pub time: Rational,
    pub kind: EventKind,
    pub segment: usize,
    pub layers: usize,
    /// Seconds of media buffered ahead of the playhead.
    pub buffer: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stall {
    pub start: Rational,
    /// `None` while still stalled.
    pub end: Option<Rational>,
    /// Segment the client was waiting for.
    pub segment: usize,
}

#[derive(Debug, Clone)]
pub struct ClientState {
    pub index: usize,
    pub profile: ClientProfile,
    pub segments: usize,
    pub segment_duration: Rational,
    pub buffer: Vec<Buffered>,
    pub phase: Phase,
    pub events: Vec<ClientEvent>,
    pub stalls: Vec<Stall>,
    pub first_request: Option<Rational>,
    pub startup_delay: Option<Rational>,
    /// Outstanding request, if any.
    pub outstanding: Option<Request>,
    /// Time the next request may be sent.
    ready_at: Rational,
    /// Next segment to fetch.
    next_fetch: usize,
    /// Index into `buffer` of the segment rendering now or next.
    cursor: usize,
    seg_start: Rational,
    seg_end: Rational,
    clock: Rational,
}

impl ClientState {
    /// A client whose first request goes out `phase`·τ into its join slot's
    /// gathering window. `phase` must lie in [0, 1).
    pub fn new(
        index: usize,
        profile: ClientProfile,
        segments: usize,
        segment_duration: Rational,
        tau: Rational,
        phase: Rational,
    ) -> Result<Self> {
        if phase < Rational::zero() || phase >= rate::int(1) {
            return Err(Error::Validation(format!("arrival phase {phase} outside [0, 1)")));
        }
        if segments == 0 {
            return Err(Error::Validation("video has no segments".into()));
        }
        let join = profile.join_slot.max(1) as i128;
        let ready_at = (rate::int(join - 1) + phase) * tau;
        Ok(ClientState {
            index,
            profile,
            segments,
            segment_duration,
            buffer: Vec::new(),
            phase: Phase::WaitingFirstSegment,
            events: Vec::new(),
            stalls: Vec::new(),
            first_request: None,
            startup_delay: None,
            outstanding: None,
            ready_at,
            next_fetch: 1,
            cursor: 0,
            seg_start: Rational::zero(),
            seg_end: Rational::zero(),
            clock: Rational::zero(),
        })
    }

    pub fn stall_count(&self) -> usize {
        self.stalls.len()
    }

    /// Every segment has been delivered (playback may still be running).
    pub fn fetched_all(&self) -> bool {
        self.next_fetch > self.segments && self.outstanding.is_none()
    }

    /// Seconds of media rendered so far.
    pub fn playhead(&self) -> Rational {
        let d = self.segment_duration;
        match self.phase {
            Phase::WaitingFirstSegment => Rational::zero(),
            Phase::Done => d * rate::int(self.segments as i128),
            Phase::Stalled => d * rate::int(self.cursor as i128),
            Phase::Playing => {
                let into = self.clock.min(self.seg_end) - self.seg_start;
                d * rate::int(self.cursor as i128) + into.max(Rational::zero())
            }
        }
    }

    /// Media buffered ahead of the playhead at the current clock.
    pub fn buffer_level(&self) -> Rational {
        let arrived = self.buffer.iter().filter(|b| b.arrival <= self.clock).count();
        (self.segment_duration * rate::int(arrived as i128) - self.playhead()).max(Rational::zero())
    }

    fn log(&mut self, time: Rational, kind: EventKind, segment: usize, layers: usize) {
        let saved = self.clock;
        self.clock = time.max(saved);
        let buffer = self.buffer_level();
        self.clock = saved;
        self.events.push(ClientEvent { time, kind, segment, layers, buffer });
    }

    /// The next request if one is due before `before`.
    pub fn next_request(&mut self, before: Rational, ids: &mut RequestIds) -> Option<Request> {
        if self.outstanding.is_some() || self.next_fetch > self.segments || self.ready_at >= before {
            return None;
        }
        let req = ids.issue(self.index, &self.profile, self.next_fetch, self.ready_at);
        if self.first_request.is_none() {
            self.first_request = Some(req.arrival);
        }
        self.log(req.arrival, EventKind::Request, req.segment, 0);
        self.outstanding = Some(req.clone());
        Some(req)
    }

    /// The optimizer answered the outstanding request with nothing; the
    /// same request stays queued for the next slot.
    pub fn zero_grant(&mut self, at: Rational) -> Result<()> {
        let seg = self.outstanding.as_ref().map(|r| r.segment).ok_or_else(|| {
            Error::Validation(format!("client `{}` has no outstanding request", self.profile.name))
        })?;
        self.log(at, EventKind::ZeroGrant, seg, 0);
        Ok(())
    }

    /// Records a delivery of the outstanding request. The next request may
    /// go out at the completion time.
    pub fn deliver(&mut self, ev: &DeliveryEvent) -> Result<()> {
        let req = match &self.outstanding {
            Some(r) if r.id == ev.request => r.clone(),
            _ => {
                return Err(Error::Validation(format!(
                    "client `{}` got a delivery for request {} it is not waiting on",
                    self.profile.name, ev.request
                )))
            }
        };
        if ev.layers == 0 || ev.layers > req.max_layers {
            return Err(Error::Validation(format!(
                "client `{}`: delivery of {} layers for m = {}",
                self.profile.name, ev.layers, req.max_layers
            )));
        }
        self.buffer.push(Buffered { segment: req.segment, layers: ev.layers, arrival: ev.completion });
        self.log(ev.completion, EventKind::Delivered, req.segment, ev.layers);
        self.outstanding = None;
        self.next_fetch += 1;
        self.ready_at = ev.completion;
        Ok(())
    }

    fn arrival_of(&self, k: usize) -> Option<Rational> {
        self.buffer.get(k).map(|b| b.arrival)
    }

    /// Plays out media up to `now`.
    pub fn advance(&mut self, now: Rational) {
        if now < self.clock {
            return;
        }
        loop {
            match self.phase {
                Phase::Done => break,
                Phase::WaitingFirstSegment => match self.arrival_of(0) {
                    Some(t) if t <= now => {
                        self.start_segment(t);
                        self.startup_delay = self.first_request.map(|f| t - f);
                        self.clock = t;
                        self.log(t, EventKind::Startup, 1, self.buffer[0].layers);
                        self.phase = Phase::Playing;
                    }
                    _ => break,
                },
                Phase::Playing => {
                    if self.seg_end > now {
                        break;
                    }
                    let end = self.seg_end;
                    self.clock = end;
                    self.cursor += 1;
                    if self.cursor == self.segments {
                        self.phase = Phase::Done;
                        self.log(end, EventKind::Done, self.segments, 0);
                        break;
                    }
                    match self.arrival_of(self.cursor) {
                        Some(t) if t <= end => self.start_segment(end),
                        _ => {
                            self.phase = Phase::Stalled;
                            self.stalls.push(Stall { start: end, end: None, segment: self.cursor + 1 });
                            self.log(end, EventKind::StallStart, self.cursor + 1, 0);
                        }
                    }
                }
                Phase::Stalled => match self.arrival_of(self.cursor) {
                    Some(t) if t <= now => {
                        if let Some(s) = self.stalls.last_mut() {
                            s.end = Some(t);
                        }
                        self.clock = t;
                        self.start_segment(t);
                        self.phase = Phase::Playing;
                        let layers = self.buffer[self.cursor].layers;
                        self.log(t, EventKind::StallEnd, self.cursor + 1, layers);
                    }
                    _ => break,
                },
            }
        }
        self.clock = now;
    }

    fn start_segment(&mut self, at: Rational) {
        self.seg_start = at;
        self.seg_end = at + self.segment_duration;
    }

    /// Earliest time at which playout can finish given what is buffered.
    pub fn playout_end(&self) -> Option<Rational> {
        if self.buffer.len() < self.segments {
            return None;
        }
        let mut t = self.buffer[0].arrival;
        for b in &self.buffer {
            t = t.max(b.arrival) + self.segment_duration;
        }
        Some(t)
    }

    /// Layer counts in segment order.
    pub fn delivered_layers(&self) -> Vec<usize> {
        self.buffer.iter().map(|b| b.layers).collect()
    }
}

/// Per-client event log as CSV: `time_s,event,segment,layers,buffer_s`.
pub fn write_event_log<W: Write>(out: W, client: &ClientState) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_s", "event", "segment", "layers", "buffer_s"])?;
    for e in &client.events {
        let kind = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        w.write_record([
            format!("{:.6}", rate::to_f64(&e.time)),
            kind,
            e.segment.to_string(),
            e.layers.to_string(),
            format!("{:.6}", rate::to_f64(&e.buffer)),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<event log>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::NodeId;
    use crate::slot::Beta;

    fn profile(join: usize) -> ClientProfile {
        ClientProfile {
            name: "c".into(),
            node: NodeId(1),
            switch: NodeId(0),
            video: "v".into(),
            max_layers: 4,
            theta: rate::int(1),
            join_slot: join,
            beta: Beta::default(),
        }
    }

    fn deliver_at(c: &mut ClientState, ids: &mut RequestIds, before: i128, at: i128) {
        let r = c.next_request(rate::int(before), ids).expect("request due");
        c.deliver(&DeliveryEvent { request: r.id, completion: rate::int(at), layers: 4, extended: false })
            .unwrap();
    }

    #[test]
    fn not_joined_yet_means_no_request() {
        let mut c = ClientState::new(0, profile(6), 12, rate::int(5), rate::int(2), Rational::zero()).unwrap();
        let mut ids = RequestIds::default();
        assert!(c.next_request(rate::int(10), &mut ids).is_none());
        assert!(c.next_request(rate::int(11), &mut ids).is_some());
    }

    #[test]
    fn worst_case_startup_is_tau_plus_theta() {
        let mut c = ClientState::new(0, profile(1), 2, rate::int(5), rate::int(2), Rational::zero()).unwrap();
        let mut ids = RequestIds::default();
        deliver_at(&mut c, &mut ids, 2, 3);
        c.advance(rate::int(4));
        assert_eq!(c.startup_delay, Some(rate::int(3)));
        assert_eq!(c.phase, Phase::Playing);
        assert_eq!(c.playhead(), rate::int(1));
    }

    #[test]
    fn late_segment_stalls_then_resumes() {
        let mut c = ClientState::new(0, profile(1), 2, rate::int(5), rate::int(2), Rational::zero()).unwrap();
        let mut ids = RequestIds::default();
        deliver_at(&mut c, &mut ids, 2, 3);
        c.advance(rate::int(9));
        assert_eq!(c.phase, Phase::Stalled);
        assert_eq!(c.stall_count(), 1);
        deliver_at(&mut c, &mut ids, 10, 11);
        c.advance(rate::int(20));
        assert_eq!(c.phase, Phase::Done);
        assert_eq!(c.stalls[0], Stall { start: rate::int(8), end: Some(rate::int(11)), segment: 2 });
        assert!(c.next_request(rate::int(100), &mut ids).is_none());
    }

    #[test]
    fn timely_segments_never_stall() {
        let mut c = ClientState::new(0, profile(1), 3, rate::int(5), rate::int(2), Rational::zero()).unwrap();
        let mut ids = RequestIds::default();
        deliver_at(&mut c, &mut ids, 2, 3);
        deliver_at(&mut c, &mut ids, 4, 5);
        deliver_at(&mut c, &mut ids, 6, 7);
        c.advance(rate::int(100));
        assert_eq!(c.phase, Phase::Done);
        assert_eq!(c.stall_count(), 0);
        assert_eq!(c.playout_end(), Some(rate::int(18)));
    }
}
