use rand::Rng;

/// One environment step as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub features_before: Vec<f64>,
    pub action_id: usize,
    pub reward: f64,
    pub features_after: Vec<f64>,
    pub done: bool,
}

/// Bounded FIFO of transitions; the oldest entry is evicted when full.
///
/// Features live in two flat ring buffers sized on the first insertion, so
/// the buffer never holds per-transition heap allocations.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    width: usize,
    before: Vec<f64>,
    after: Vec<f64>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    // Slot of the oldest transition.
    start: usize,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer needs a positive capacity");
        Self {
            capacity,
            width: 0,
            before: Vec::new(),
            after: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            start: 0,
            len: 0,
        }
    }

    /// Appends `t`, evicting the oldest transition when full.
    ///
    /// Panics if the feature width differs from earlier transitions.
    pub fn push(&mut self, t: Transition) {
        if self.len == 0 && self.actions.is_empty() {
            self.width = t.features_before.len();
            self.before = vec![0.0; self.capacity * self.width];
            self.after = vec![0.0; self.capacity * self.width];
            self.actions = vec![0; self.capacity];
            self.rewards = vec![0.0; self.capacity];
            self.dones = vec![false; self.capacity];
        }
        let w = self.width;
        assert_eq!(t.features_before.len(), w, "feature width changed");
        let slot = if self.len == self.capacity {
            let s = self.start;
            self.start = (self.start + 1) % self.capacity;
            s
        } else {
            let s = (self.start + self.len) % self.capacity;
            self.len += 1;
            s
        };
        self.before[slot * w..(slot + 1) * w].copy_from_slice(&t.features_before);
        let after = &mut self.after[slot * w..(slot + 1) * w];
        if t.features_after.len() == w {
            after.copy_from_slice(&t.features_after);
        } else {
            assert!(t.done, "feature width changed");
            after.fill(0.0);
        }
        self.actions[slot] = t.action_id;
        self.rewards[slot] = t.reward;
        self.dones[slot] = t.done;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn at_slot(&self, slot: usize) -> Transition {
        let w = self.width;
        Transition {
            features_before: self.before[slot * w..(slot + 1) * w].to_vec(),
            action_id: self.actions[slot],
            reward: self.rewards[slot],
            features_after: self.after[slot * w..(slot + 1) * w].to_vec(),
            done: self.dones[slot],
        }
    }

    /// The `i`-th oldest transition.
    pub fn get(&self, i: usize) -> Option<Transition> {
        (i < self.len).then(|| self.at_slot((self.start + i) % self.capacity))
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = Transition> + '_ {
        (0..self.len).map(move |i| self.at_slot((self.start + i) % self.capacity))
    }

    /// `size` transitions drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Vec<Transition> {
        if self.len == 0 {
            return Vec::new();
        }
        (0..size)
            .map(|_| self.at_slot((self.start + rng.random_range(0..self.len)) % self.capacity))
            .collect()
    }
}
