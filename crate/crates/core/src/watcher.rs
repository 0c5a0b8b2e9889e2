//! Release watching: fetch configured sources, detect changes by content
//! hash and drive the pipeline. Time and network access are injected.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};

use crate::config::SourceConfig;
use crate::error::{Error, Result};
use crate::pipeline::run_pipeline;
use crate::store::{sha256_hex, Store, VersionManifest};

pub const MAX_ATTEMPTS: usize = 3;
/// Sleeps between consecutive attempts.
pub const RETRY_BACKOFF: [Duration; 2] = [Duration::from_secs(1), Duration::from_secs(2)];

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
    fn sleep(&self, duration: Duration);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// A clock that only moves when slept on or advanced.
#[derive(Debug)]
pub struct FakeClock {
    now: Mutex<DateTime<Utc>>,
    sleeps: Mutex<Vec<Duration>>,
}

impl FakeClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self {
            now: Mutex::new(start),
            sleeps: Mutex::new(Vec::new()),
        }
    }

    pub fn advance(&self, by: Duration) {
        let mut now = self.now.lock().expect("clock lock");
        *now += chrono::Duration::from_std(by).expect("duration in range");
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.sleeps.lock().expect("clock lock").clone()
    }
}

impl Clock for FakeClock {
    fn now(&self) -> DateTime<Utc> {
        *self.now.lock().expect("clock lock")
    }

    fn sleep(&self, duration: Duration) {
        self.sleeps.lock().expect("clock lock").push(duration);
        self.advance(duration);
    }
}

/// One attempt at retrieving the full body behind `url`.
pub trait Fetcher: Send + Sync {
    fn fetch_once(&self, url: &str) -> std::result::Result<Vec<u8>, String>;
}

/// Reads local paths and `file://` URLs from disk and `http(s)://` URLs over
/// the network.
#[derive(Debug, Clone)]
pub struct DefaultFetcher {
    agent: ureq::Agent,
}

impl DefaultFetcher {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl Default for DefaultFetcher {
    fn default() -> Self {
        Self::new(Duration::from_secs(600))
    }
}

impl Fetcher for DefaultFetcher {
    fn fetch_once(&self, url: &str) -> std::result::Result<Vec<u8>, String> {
        if url.starts_with("http://") || url.starts_with("https://") {
            let mut response = self.agent.get(url).call().map_err(|e| e.to_string())?;
            response
                .body_mut()
                .with_config()
                .limit(u64::MAX)
                .read_to_vec()
                .map_err(|e| e.to_string())
        } else {
            let path = url.strip_prefix("file://").unwrap_or(url);
            std::fs::read(path).map_err(|e| format!("{path}: {e}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub bytes: Vec<u8>,
    pub sha256: String,
}

/// Up to [`MAX_ATTEMPTS`] attempts with [`RETRY_BACKOFF`] between them. The
/// checksum is always computed over the received bytes.
pub fn fetch(fetcher: &dyn Fetcher, clock: &dyn Clock, url: &str) -> Result<Fetched> {
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        if attempt > 0 {
            clock.sleep(RETRY_BACKOFF[attempt - 1]);
        }
        match fetcher.fetch_once(url) {
            Ok(bytes) => {
                let sha256 = sha256_hex(&bytes);
                return Ok(Fetched { bytes, sha256 });
            }
            Err(e) => {
                tracing::warn!(url = %url, attempt = attempt + 1, error = %e, "fetch attempt failed");
                last = e;
            }
        }
    }
    Err(Error::FetchFailed {
        url: url.to_string(),
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateCheck {
    Changed(Fetched),
    Unchanged { sha256: String },
}

/// `Changed` iff the fetched checksum differs from that of the most recently
/// retrieved version in `history`, or `history` is empty.
pub fn check_for_update(
    fetcher: &dyn Fetcher,
    clock: &dyn Clock,
    source: &SourceConfig,
    history: &[VersionManifest],
) -> Result<UpdateCheck> {
    let fetched = fetch(fetcher, clock, &source.url)?;
    let latest = history.iter().max_by_key(|m| m.retrieved_at);
    match latest {
        Some(m) if m.sha256 == fetched.sha256 => Ok(UpdateCheck::Unchanged { sha256: fetched.sha256 }),
        _ => Ok(UpdateCheck::Changed(fetched)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CycleOutcome {
    Unchanged,
    Published(VersionManifest),
    /// A cycle for this source was already running.
    Skipped,
}

type PublishHook = Box<dyn Fn(&VersionManifest) + Send + Sync>;

/// Polls every configured source on its own interval.
pub struct Watcher {
    store: Store,
    sources: Vec<SourceConfig>,
    fetcher: Arc<dyn Fetcher>,
    clock: Arc<dyn Clock>,
    busy: Mutex<HashMap<String, bool>>,
    on_publish: Option<PublishHook>,
    granularity: Duration,
}

struct BusyGuard<'a> {
    busy: &'a Mutex<HashMap<String, bool>>,
    kg: String,
}

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.busy.lock().expect("busy lock").insert(self.kg.clone(), false);
    }
}

impl Watcher {
    pub fn new(store: Store, sources: Vec<SourceConfig>, fetcher: Arc<dyn Fetcher>, clock: Arc<dyn Clock>) -> Self {
        Self {
            store,
            sources,
            fetcher,
            clock,
            busy: Mutex::new(HashMap::new()),
            on_publish: None,
            granularity: Duration::from_secs(1),
        }
    }

    /// Called after every successful publication.
    pub fn on_publish(mut self, hook: impl Fn(&VersionManifest) + Send + Sync + 'static) -> Self {
        self.on_publish = Some(Box::new(hook));
        self
    }

    /// Longest single sleep of [`Watcher::run`]; bounds stop latency.
    pub fn with_granularity(mut self, granularity: Duration) -> Self {
        self.granularity = granularity.max(Duration::from_millis(1));
        self
    }

    pub fn sources(&self) -> &[SourceConfig] {
        &self.sources
    }

    fn try_acquire(&self, kg: &str) -> Option<BusyGuard<'_>> {
        let mut busy = self.busy.lock().expect("busy lock");
        let flag = busy.entry(kg.to_string()).or_insert(false);
        if *flag {
            return None;
        }
        *flag = true;
        Some(BusyGuard {
            busy: &self.busy,
            kg: kg.to_string(),
        })
    }

    /// One check (and, on change, one pipeline run) for a single source.
    pub fn cycle(&self, source: &SourceConfig) -> Result<CycleOutcome> {
        let Some(_guard) = self.try_acquire(&source.kg_name) else {
            tracing::info!(kg = %source.kg_name, "cycle skipped, previous run still active");
            return Ok(CycleOutcome::Skipped);
        };
        let history = self.store.manifests(&source.kg_name)?;
        match check_for_update(self.fetcher.as_ref(), self.clock.as_ref(), source, &history)? {
            UpdateCheck::Unchanged { sha256 } => {
                tracing::info!(kg = %source.kg_name, sha256 = %sha256, "source unchanged");
                Ok(CycleOutcome::Unchanged)
            }
            UpdateCheck::Changed(fetched) => {
                tracing::info!(kg = %source.kg_name, sha256 = %fetched.sha256, "change detected, retraining");
                let manifest = run_pipeline(&self.store, source, &fetched.bytes, self.clock.as_ref())?;
                if let Some(hook) = &self.on_publish {
                    hook(&manifest);
                }
                Ok(CycleOutcome::Published(manifest))
            }
        }
    }

    /// Manual trigger: one immediate cycle over every source, concurrently.
    /// Results are in configuration order.
    pub fn run_once(&self) -> Vec<(String, Result<CycleOutcome>)> {
        std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .sources
                .iter()
                .map(|s| scope.spawn(move || self.logged_cycle(s)))
                .collect();
            self.sources
                .iter()
                .zip(handles)
                .map(|(s, h)| {
                    let outcome = h
                        .join()
                        .unwrap_or_else(|_| Err(Error::InvalidConfig(format!("cycle for `{}` panicked", s.kg_name))));
                    (s.kg_name.clone(), outcome)
                })
                .collect()
        })
    }

    fn logged_cycle(&self, source: &SourceConfig) -> Result<CycleOutcome> {
        let outcome = self.cycle(source);
        if let Err(e) = &outcome {
            tracing::error!(kg = %source.kg_name, error = %e, "cycle failed");
        }
        outcome
    }

    /// Polls each source immediately and then every `poll_interval` until
    /// `should_stop` returns true. Per-source failures are logged and never
    /// end the loop.
    pub fn run(&self, should_stop: impl Fn() -> bool) {
        let start = self.clock.now();
        let mut due: Vec<DateTime<Utc>> = vec![start; self.sources.len()];
        while !should_stop() {
            let now = self.clock.now();
            let ready: Vec<usize> = (0..self.sources.len()).filter(|&i| due[i] <= now).collect();
            if !ready.is_empty() {
                std::thread::scope(|scope| {
                    for &i in &ready {
                        let source = &self.sources[i];
                        scope.spawn(move || self.logged_cycle(source));
                    }
                });
                for i in ready {
                    let interval =
                        chrono::Duration::from_std(self.sources[i].poll_interval).expect("interval in range");
                    due[i] = now + interval;
                }
                continue;
            }
            let Some(next) = due.iter().min() else {
                self.clock.sleep(self.granularity);
                continue;
            };
            let wait = (*next - now).to_std().unwrap_or_default().min(self.granularity);
            self.clock.sleep(wait);
        }
    }
}
