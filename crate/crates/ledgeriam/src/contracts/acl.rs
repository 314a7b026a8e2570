//! Access-control lists: a fixed 32-slot bitmask of grantable functions.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Number of function slots an [`Acl`] can address.
pub const ACL_SLOTS: u8 = 32;

/// A 32-slot function bitmask. Bit `i` set means function slot `i` is
/// granted; bits are independent of one another.
#[derive(Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Acl(pub u32);

impl Acl {
    pub const EMPTY: Acl = Acl(0);

    /// ACL with exactly the given slots set. Slots ≥ 32 are ignored.
    pub fn from_slots(slots: &[u8]) -> Acl {
        let mut bits = 0u32;
        for &slot in slots {
            if slot < ACL_SLOTS {
                bits |= 1 << slot;
            }
        }
        Acl(bits)
    }

    pub fn permits(&self, slot: u8) -> bool {
        slot < ACL_SLOTS && self.0 & (1 << slot) != 0
    }

    pub fn bits(&self) -> u32 {
        self.0
    }
}

impl fmt::Debug for Acl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Acl({:#010x})", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_are_independent() {
        for granted in 0..ACL_SLOTS {
            let acl = Acl::from_slots(&[granted]);
            for probe in 0..ACL_SLOTS {
                assert_eq!(acl.permits(probe), probe == granted);
            }
        }
    }

    #[test]
    fn out_of_range_slot_never_permits() {
        let acl = Acl(u32::MAX);
        assert!(!acl.permits(32));
        assert!(!acl.permits(255));
    }

    #[test]
    fn from_slots_collects_multiple_bits() {
        let acl = Acl::from_slots(&[0, 2, 31]);
        assert!(acl.permits(0) && acl.permits(2) && acl.permits(31));
        assert!(!acl.permits(1));
        assert_eq!(acl.bits(), 0x8000_0005);
    }
}
