//! License check and per-client fixed-window rate limiting.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Admitted,
    AuthRejected,
    Throttled,
}

#[derive(Debug, Clone)]
pub struct AccessState {
    pub license_keys: BTreeSet<String>,
    pub window_seconds: f64,
    pub max_requests_per_window: u32,
    // client id -> (window index, admitted count)
    per_client_counters: HashMap<String, (u64, u32)>,
}

impl AccessState {
    pub fn new(
        license_keys: impl IntoIterator<Item = String>,
        window_seconds: f64,
        max_requests_per_window: u32,
    ) -> Result<Self, String> {
        if !(window_seconds > 0.0 && window_seconds.is_finite()) {
            return Err(format!("window must be positive, got {window_seconds}"));
        }
        if max_requests_per_window == 0 {
            return Err("max requests per window must be positive".into());
        }
        Ok(AccessState {
            license_keys: license_keys.into_iter().collect(),
            window_seconds,
            max_requests_per_window,
            per_client_counters: HashMap::new(),
        })
    }

    fn window(&self, now: Duration) -> u64 {
        (now.as_secs_f64() / self.window_seconds).floor() as u64
    }

    /// Admitted requests of `client_id` in the window containing `now`.
    pub fn count(&self, client_id: &str, now: Duration) -> u32 {
        match self.per_client_counters.get(client_id) {
            Some((w, n)) if *w == self.window(now) => *n,
            _ => 0,
        }
    }

    pub fn admit(&mut self, client_id: &str, license: &str, now: Duration) -> Admission {
        if !self.license_keys.contains(license) {
            return Admission::AuthRejected;
        }
        let window = self.window(now);
        let max = self.max_requests_per_window;
        let slot = self
            .per_client_counters
            .entry(client_id.to_string())
            .or_insert((window, 0));
        if slot.0 != window {
            *slot = (window, 0);
        }
        if slot.1 >= max {
            return Admission::Throttled;
        }
        slot.1 += 1;
        Admission::Admitted
    }
}

pub fn admit_request(
    state: &mut AccessState,
    client_id: &str,
    license: &str,
    now: Duration,
) -> Admission {
    state.admit(client_id, license, now)
}

/// Time source for admission decisions.
pub trait Clock: Send + Sync {
    fn now(&self) -> Duration;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default()
    }
}

/// Settable clock for tests.
#[derive(Debug, Default, Clone)]
pub struct ManualClock(Arc<Mutex<Duration>>);

impl ManualClock {
    pub fn set(&self, t: Duration) {
        *self.0.lock().unwrap() = t;
    }

    pub fn advance(&self, by: Duration) {
        *self.0.lock().unwrap() += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        *self.0.lock().unwrap()
    }
}
