//! In-memory session store with per-session locking and idle eviction.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Mutex, RwLock};
use rand_chacha::ChaCha8Rng;
use spi_ttt::orchestrator::game_rng;
use spi_ttt::{Engine, GameSession, Player};
use uuid::Uuid;

pub const DEFAULT_IDLE_TTL: Duration = Duration::from_secs(60 * 60);

#[derive(Debug)]
pub struct Slot {
    pub session: GameSession,
    pub touched: Instant,
}

pub type SharedSlot = Arc<Mutex<Slot>>;

#[derive(Debug)]
pub struct SessionStore {
    engine: Arc<Engine>,
    sessions: RwLock<HashMap<String, SharedSlot>>,
    idle_ttl: Duration,
    /// Base seed for per-game noise streams; `None` picks a random one per game.
    seed: Option<u64>,
    created: AtomicU32,
}

impl SessionStore {
    pub fn new(engine: Arc<Engine>, idle_ttl: Duration, seed: Option<u64>) -> SessionStore {
        SessionStore {
            engine,
            sessions: RwLock::new(HashMap::new()),
            idle_ttl,
            seed,
            created: AtomicU32::new(0),
        }
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    fn next_rng(&self) -> ChaCha8Rng {
        let n = self.created.fetch_add(1, Ordering::Relaxed);
        match self.seed {
            Some(seed) => game_rng(seed, n),
            None => game_rng(Uuid::new_v4().as_u64_pair().0, n),
        }
    }

    /// Registers a fresh session and returns its slot.
    pub fn create(&self, first_mover: Player) -> SharedSlot {
        let id = Uuid::new_v4().simple().to_string();
        let session = GameSession::new(id.clone(), first_mover, Arc::clone(&self.engine), self.next_rng());
        let slot = Arc::new(Mutex::new(Slot {
            session,
            touched: Instant::now(),
        }));
        self.sessions.write().insert(id, Arc::clone(&slot));
        slot
    }

    pub fn get(&self, id: &str) -> Option<SharedSlot> {
        self.sessions.read().get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops sessions untouched for longer than the idle TTL as of `now`.
    /// Sessions currently locked by a request are kept.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let mut sessions = self.sessions.write();
        let before = sessions.len();
        sessions.retain(|_, slot| match slot.try_lock() {
            Some(slot) => now.saturating_duration_since(slot.touched) <= self.idle_ttl,
            None => true,
        });
        before - sessions.len()
    }
}
