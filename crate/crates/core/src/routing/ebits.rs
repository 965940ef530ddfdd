//! Ebit consumption along delivered paths and replenishment.

use serde::{Deserialize, Serialize};

use super::resolve::{link, LinkSet};
use super::{EntangledPath, Overlay, PathCase, RoutingError};
use crate::addressing::QuantumAddress;
use crate::topology::EspId;

/// Reference to one superposed-address register travelling in a header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperposedRef {
    pub owner: EspId,
    pub entry_label: usize,
    pub partition: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketHeader {
    pub source: QuantumAddress,
    pub destination: QuantumAddress,
    pub superposed: Vec<SuperposedRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EbitHandle(pub u64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumPacket {
    pub header: PacketHeader,
    pub payload: Vec<EbitHandle>,
}

impl QuantumPacket {
    pub fn new(source: QuantumAddress, destination: QuantumAddress, payload: Vec<EbitHandle>) -> Self {
        Self { header: PacketHeader { source, destination, superposed: Vec::new() }, payload }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub source: EspId,
    pub destination: EspId,
    pub path: EntangledPath,
    /// Links consumed, in swap order.
    pub swaps: Vec<(EspId, EspId)>,
    /// Link found depleted on the first attempt, if any.
    pub depleted: Option<(EspId, EspId)>,
    pub delivered: bool,
}

impl Overlay {
    /// Ebits left on the link `a - b`, read from whichever ends hold an entry.
    pub fn link_ebits(&self, a: EspId, b: EspId) -> Option<u32> {
        let ends = [self.tables[a].entry(b), self.tables[b].entry(a)];
        ends.into_iter().flatten().map(|e| e.ebits).min()
    }

    pub fn total_ebits(&self) -> u64 {
        self.tables.iter().flat_map(|t| &t.entries).map(|e| u64::from(e.ebits)).sum()
    }

    /// Entries currently at zero ebits, as `(owner, peer)`.
    pub fn depleted_entries(&self) -> Vec<(EspId, EspId)> {
        self.tables
            .iter()
            .flat_map(|t| t.entries.iter().filter(|e| e.ebits == 0).map(move |e| (t.owner, e.e_hop)))
            .collect()
    }

    /// Spends one ebit on every segment of `path`, at both ends of each link.
    ///
    /// Nothing is consumed unless every segment has an ebit to spare.
    pub fn consume(&mut self, path: &EntangledPath) -> Result<Vec<(EspId, EspId)>, RoutingError> {
        let segments: Vec<(EspId, EspId)> = path.segments().collect();
        for &(a, b) in &segments {
            match self.link_ebits(a, b) {
                None => return Err(RoutingError::MissingLink(a, b)),
                Some(0) => return Err(RoutingError::DepletedLink(a, b)),
                Some(_) => {}
            }
        }
        for &(a, b) in &segments {
            for (x, y) in [(a, b), (b, a)] {
                if let Some(e) = self.tables[x].entry_mut(y) {
                    e.ebits -= 1;
                }
            }
        }
        Ok(segments)
    }

    /// Adds up to `rate` ebits to every entry, capped at the budget.
    pub fn replenish(&mut self, rate: u32) {
        let budget = self.params.ebit_budget;
        for e in self.tables.iter_mut().flat_map(|t| t.entries.iter_mut()) {
            e.ebits = e.ebits.saturating_add(rate).min(budget);
        }
    }

    fn esp_of(&self, addr: &QuantumAddress) -> Result<EspId, RoutingError> {
        self.graph.plan().esp_index(addr).ok_or(RoutingError::UnknownAddress(*addr))
    }

    /// Resolves and delivers one packet, swapping along the chosen path.
    ///
    /// A depleted link triggers one re-resolution that avoids it; a second
    /// depletion, or a path the scheme cannot find, is reported as an
    /// undelivered record with a `Failure` path. Fallback paths run over
    /// physical links and are delivered without touching table ebits.
    pub fn swap_and_replenish(&mut self, packet: &QuantumPacket) -> Result<DeliveryRecord, RoutingError> {
        if packet.payload.is_empty() {
            return Err(RoutingError::EmptyPayload);
        }
        let i = self.esp_of(&packet.header.source)?;
        let d = self.esp_of(&packet.header.destination)?;
        let mut excluded = LinkSet::new();
        let mut depleted = None;
        for _ in 0..2 {
            let path = self.resolve_excluding(i, d, &excluded);
            let delivered_without_swaps = match path.case {
                PathCase::Failure => break,
                PathCase::Fallback => true,
                _ => i == d,
            };
            if delivered_without_swaps {
                return Ok(DeliveryRecord { source: i, destination: d, path, swaps: Vec::new(), depleted, delivered: true });
            }
            match self.consume(&path) {
                Ok(swaps) => return Ok(DeliveryRecord { source: i, destination: d, path, swaps, depleted, delivered: true }),
                Err(RoutingError::DepletedLink(a, b)) => {
                    log::debug!("link {a}-{b} depleted; retrying {i}->{d} without it");
                    depleted = Some((a, b));
                    excluded.insert(link(a, b));
                }
                Err(e) => return Err(e),
            }
        }
        let mut failed = self.resolve_excluding(i, d, &excluded);
        if failed.case != PathCase::Failure {
            failed = EntangledPath {
                repeaters: Vec::new(),
                segment_costs: Vec::new(),
                total_cost: f64::INFINITY,
                case: PathCase::Failure,
                stretch: f64::INFINITY,
                anchors: None,
                diagnostic: Some("entangled links depleted on both attempts".into()),
                ..failed
            };
        }
        Ok(DeliveryRecord { source: i, destination: d, path: failed, swaps: Vec::new(), depleted, delivered: false })
    }
}
