use std::collections::HashMap;

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Slot<V> {
    key: String,
    value: V,
    stamp: u64,
    prev: usize,
    next: usize,
}

/// Hash map keyed by case id that also keeps entries ordered by last-update stamp,
/// so the oldest entry is found in O(1).
///
/// Stamps passed to [`insert`](CaseMap::insert) and [`touch`](CaseMap::touch)
/// must be non-decreasing. Entries sharing the oldest stamp are evicted in
/// lexicographic key order.
#[derive(Debug, Clone)]
pub struct CaseMap<V> {
    slots: Vec<Slot<V>>,
    free: Vec<usize>,
    lookup: HashMap<String, usize>,
    oldest: usize,
    newest: usize,
}

impl<V> Default for CaseMap<V> {
    fn default() -> Self {
        Self::with_capacity(0)
    }
}

impl<V> CaseMap<V> {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            slots: Vec::with_capacity(capacity),
            free: Vec::new(),
            lookup: HashMap::with_capacity(capacity),
            oldest: NIL,
            newest: NIL,
        }
    }

    pub fn len(&self) -> usize {
        self.lookup.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lookup.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&V> {
        self.lookup.get(key).map(|&i| &self.slots[i].value)
    }

    pub fn stamp(&self, key: &str) -> Option<u64> {
        self.lookup.get(key).map(|&i| self.slots[i].stamp)
    }

    /// Returns the value and marks the entry as updated at `stamp`.
    pub fn touch(&mut self, key: &str, stamp: u64) -> Option<&mut V> {
        let i = *self.lookup.get(key)?;
        debug_assert!(self.newest == NIL || stamp >= self.slots[self.newest].stamp);
        self.unlink(i);
        self.slots[i].stamp = stamp;
        self.link_newest(i);
        Some(&mut self.slots[i].value)
    }

    /// Inserts a key that is not present yet.
    pub fn insert(&mut self, key: String, value: V, stamp: u64) {
        debug_assert!(!self.lookup.contains_key(&key));
        debug_assert!(self.newest == NIL || stamp >= self.slots[self.newest].stamp);
        let slot = Slot {
            key: key.clone(),
            value,
            stamp,
            prev: NIL,
            next: NIL,
        };
        let i = match self.free.pop() {
            Some(i) => {
                self.slots[i] = slot;
                i
            }
            None => {
                self.slots.push(slot);
                self.slots.len() - 1
            }
        };
        self.lookup.insert(key, i);
        self.link_newest(i);
    }

    /// Removes the entry with the smallest stamp.
    pub fn pop_oldest(&mut self) -> Option<(String, V, u64)>
    where
        V: Clone,
    {
        if self.oldest == NIL {
            return None;
        }
        let mut victim = self.oldest;
        let stamp = self.slots[victim].stamp;
        let mut i = self.slots[victim].next;
        while i != NIL && self.slots[i].stamp == stamp {
            if self.slots[i].key < self.slots[victim].key {
                victim = i;
            }
            i = self.slots[i].next;
        }
        self.unlink(victim);
        let slot = &self.slots[victim];
        self.lookup.remove(&slot.key);
        self.free.push(victim);
        Some((slot.key.clone(), slot.value.clone(), slot.stamp))
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &V, u64)> {
        let mut i = self.oldest;
        std::iter::from_fn(move || {
            if i == NIL {
                return None;
            }
            let s = &self.slots[i];
            i = s.next;
            Some((s.key.as_str(), &s.value, s.stamp))
        })
    }

    fn unlink(&mut self, i: usize) {
        let (prev, next) = (self.slots[i].prev, self.slots[i].next);
        if prev == NIL {
            self.oldest = next;
        } else {
            self.slots[prev].next = next;
        }
        if next == NIL {
            self.newest = prev;
        } else {
            self.slots[next].prev = prev;
        }
        self.slots[i].prev = NIL;
        self.slots[i].next = NIL;
    }

    fn link_newest(&mut self, i: usize) {
        self.slots[i].prev = self.newest;
        self.slots[i].next = NIL;
        if self.newest == NIL {
            self.oldest = i;
        } else {
            self.slots[self.newest].next = i;
        }
        self.newest = i;
    }
}
