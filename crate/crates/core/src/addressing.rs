//! Prefix-structured quantum addresses.
//!
//! Every node is labelled by a computational-basis state of an `N`-qubit
//! register. ESPs own distinct `p`-bit prefixes and the tier-1 nodes they
//! serve share that prefix, so the clusters partition the basis.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Widest register we can index with a `u64` basis value.
pub const MAX_ADDRESS_WIDTH: u8 = 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AddressError {
    #[error("address space cannot host {n_e} clusters of {max_cluster_size} tier-1 nodes")]
    InvalidCapacity { n_e: usize, max_cluster_size: usize },
    #[error("a plan needs at least one ESP")]
    NoEsps,
    #[error("prefix length {p} exceeds address width {width}")]
    OutOfRange { p: u8, width: u8 },
    #[error("address {0} is not assigned to any cluster")]
    Unassigned(QuantumAddress),
    #[error("address width {0} is not supported (1..=63)")]
    BadWidth(u8),
    #[error("value {value} does not fit in {width} bits")]
    ValueTooWide { value: u64, width: u8 },
    #[error("invalid bitstring {0:?}")]
    BadBits(String),
    #[error("address width {found} does not match plan width {expected}")]
    WidthMismatch { expected: u8, found: u8 },
}

/// A computational-basis label `|x>` of fixed width.
///
/// Bit 0 of the printed string is the most significant bit, matching the
/// usual ket notation (`|1011>` has value 11).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantumAddress {
    width: u8,
    value: u64,
}

impl QuantumAddress {
    pub fn new(value: u64, width: u8) -> Result<Self, AddressError> {
        if width == 0 || width > MAX_ADDRESS_WIDTH {
            return Err(AddressError::BadWidth(width));
        }
        if value >> width != 0 {
            return Err(AddressError::ValueTooWide { value, width });
        }
        Ok(Self { width, value })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    /// Bit at position `i` counted from the most significant end.
    pub fn bit(&self, i: u8) -> bool {
        debug_assert!(i < self.width);
        (self.value >> (self.width - 1 - i)) & 1 == 1
    }

    /// Integer value of the first `p` bits.
    pub fn prefix_value(&self, p: u8) -> Result<u64, AddressError> {
        if p > self.width {
            return Err(AddressError::OutOfRange { p, width: self.width });
        }
        Ok(if p == 0 { 0 } else { self.value >> (self.width - p) })
    }

    pub fn prefix(&self, p: u8) -> Result<String, AddressError> {
        if p > self.width {
            return Err(AddressError::OutOfRange { p, width: self.width });
        }
        Ok(self.bits()[..p as usize].to_string())
    }

    pub fn bits(&self) -> String {
        format!("{:0width$b}", self.value, width = self.width as usize)
    }
}

impl fmt::Display for QuantumAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bits())
    }
}

impl FromStr for QuantumAddress {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || s.len() > MAX_ADDRESS_WIDTH as usize || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(AddressError::BadBits(s.to_string()));
        }
        let value = u64::from_str_radix(s, 2).map_err(|_| AddressError::BadBits(s.to_string()))?;
        QuantumAddress::new(value, s.len() as u8)
    }
}

impl Serialize for QuantumAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.bits())
    }
}

impl<'de> Deserialize<'de> for QuantumAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// First `p` bits of `addr`.
pub fn prefix_of(addr: &QuantumAddress, p: u8) -> Result<String, AddressError> {
    addr.prefix(p)
}

/// `ceil(log2(x))`, with `ceil_log2(0) == ceil_log2(1) == 0`.
pub fn ceil_log2(x: u64) -> u8 {
    if x <= 1 {
        0
    } else {
        (64 - (x - 1).leading_zeros()) as u8
    }
}

/// Address assignment for ESPs and the tier-1 nodes they serve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PlanDocument", into = "PlanDocument")]
pub struct AddressPlan {
    n: usize,
    n_e: usize,
    p: u8,
    width: u8,
    esp_addresses: Vec<QuantumAddress>,
    cluster_map: BTreeMap<QuantumAddress, Vec<QuantumAddress>>,
}

/// Assigns addresses to `n_e` ESPs, each serving `max_cluster_size` tier-1 nodes.
///
/// ESP `i` gets prefix `i` (lexicographic order) followed by an all-zero
/// suffix; its tier-1 nodes get suffixes `1..=max_cluster_size`. The width is
/// `ceil(log2 n)` whenever the prefix split leaves room for the clusters and
/// is widened to `p + ceil(log2(max_cluster_size + 1))` otherwise, never
/// below one qubit.
pub fn assign_addresses(n_e: usize, max_cluster_size: usize, _seed: u64) -> Result<AddressPlan, AddressError> {
    if n_e == 0 {
        return Err(AddressError::NoEsps);
    }
    let capacity = || AddressError::InvalidCapacity { n_e, max_cluster_size };
    let per_cluster = (max_cluster_size as u64).checked_add(1).ok_or_else(capacity)?;
    let n = (n_e as u64).checked_mul(per_cluster).ok_or_else(capacity)?;
    let p = ceil_log2(n_e as u64);
    let suffix = ceil_log2(per_cluster);
    let width = ceil_log2(n).max(p + suffix).max(1);
    if width > MAX_ADDRESS_WIDTH {
        return Err(capacity());
    }
    let shift = width - p;
    if (1u64 << shift) - 1 < max_cluster_size as u64 {
        return Err(capacity());
    }

    let mut esp_addresses = Vec::with_capacity(n_e);
    let mut cluster_map = BTreeMap::new();
    for i in 0..n_e as u64 {
        let base = i << shift;
        let esp = QuantumAddress::new(base, width)?;
        let members = (1..=max_cluster_size as u64)
            .map(|s| QuantumAddress::new(base | s, width))
            .collect::<Result<Vec<_>, _>>()?;
        esp_addresses.push(esp);
        cluster_map.insert(esp, members);
    }
    Ok(AddressPlan { n: n as usize, n_e, p, width, esp_addresses, cluster_map })
}

impl AddressPlan {
    /// Total number of assigned addresses (ESPs plus tier-1 nodes).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_e(&self) -> usize {
        self.n_e
    }

    pub fn prefix_len(&self) -> u8 {
        self.p
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn esp_addresses(&self) -> &[QuantumAddress] {
        &self.esp_addresses
    }

    pub fn esp_address(&self, esp: usize) -> QuantumAddress {
        self.esp_addresses[esp]
    }

    pub fn cluster(&self, esp: &QuantumAddress) -> Option<&[QuantumAddress]> {
        self.cluster_map.get(esp).map(Vec::as_slice)
    }

    pub fn cluster_map(&self) -> &BTreeMap<QuantumAddress, Vec<QuantumAddress>> {
        &self.cluster_map
    }

    /// Index of the ESP owning exactly this address, if it is an ESP address.
    pub fn esp_index(&self, addr: &QuantumAddress) -> Option<usize> {
        self.esp_addresses.binary_search(addr).ok()
    }

    /// Every assigned address: each ESP followed by its cluster.
    pub fn assigned(&self) -> impl Iterator<Item = QuantumAddress> + '_ {
        self.cluster_map.iter().flat_map(|(esp, members)| std::iter::once(*esp).chain(members.iter().copied()))
    }

    /// The ESP whose serving cluster contains `addr`.
    pub fn serving_esp(&self, addr: &QuantumAddress) -> Result<QuantumAddress, AddressError> {
        if addr.width() != self.width {
            return Err(AddressError::WidthMismatch { expected: self.width, found: addr.width() });
        }
        let prefix = addr.prefix_value(self.p)?;
        let esp = self.esp_addresses.get(prefix as usize).ok_or(AddressError::Unassigned(*addr))?;
        if esp == addr || self.cluster_map[esp].binary_search(addr).is_ok() {
            Ok(*esp)
        } else {
            Err(AddressError::Unassigned(*addr))
        }
    }
}

pub fn serving_esp(addr: &QuantumAddress, plan: &AddressPlan) -> Result<QuantumAddress, AddressError> {
    plan.serving_esp(addr)
}

#[derive(Serialize, Deserialize)]
struct PlanDocument {
    n: usize,
    n_e: usize,
    p: u8,
    esp_addresses: Vec<QuantumAddress>,
    cluster_map: BTreeMap<QuantumAddress, Vec<QuantumAddress>>,
}

impl From<AddressPlan> for PlanDocument {
    fn from(plan: AddressPlan) -> Self {
        PlanDocument {
            n: plan.n,
            n_e: plan.n_e,
            p: plan.p,
            esp_addresses: plan.esp_addresses,
            cluster_map: plan.cluster_map,
        }
    }
}

impl TryFrom<PlanDocument> for AddressPlan {
    type Error = AddressError;

    fn try_from(doc: PlanDocument) -> Result<Self, Self::Error> {
        let width = doc.esp_addresses.first().map(QuantumAddress::width).ok_or(AddressError::NoEsps)?;
        let all = doc.esp_addresses.iter().chain(doc.cluster_map.values().flatten());
        if let Some(bad) = all.clone().find(|a| a.width() != width) {
            return Err(AddressError::WidthMismatch { expected: width, found: bad.width() });
        }
        if doc.p > width {
            return Err(AddressError::OutOfRange { p: doc.p, width });
        }
        Ok(AddressPlan {
            n: doc.n,
            n_e: doc.n_e,
            p: doc.p,
            width,
            esp_addresses: doc.esp_addresses,
            cluster_map: doc.cluster_map,
        })
    }
}
