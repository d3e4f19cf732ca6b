use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{MsgType, OmciHeader, OmciMessage};
use crate::sim::NodeId;

/// Result codes carried in the first content byte of a response.
pub mod result {
    pub const OK: u8 = 0x00;
    pub const PROCESSING_ERROR: u8 = 0x01;
    pub const NOT_SUPPORTED: u8 = 0x02;
    pub const UNKNOWN_ENTITY: u8 = 0x04;
    pub const UNKNOWN_INSTANCE: u8 = 0x05;
    pub const INSTANCE_EXISTS: u8 = 0x07;
    /// Adapter could not map the routing bytes to an attached SFU.
    pub const UNKNOWN_TARGET: u8 = 0x0F;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityClass {
    DeviceInfo,
    WifiConfig,
    QosPolicy,
    PowerPolicy,
    Counters,
}

impl EntityClass {
    pub const ALL: [EntityClass; 5] =
        [EntityClass::DeviceInfo, EntityClass::WifiConfig, EntityClass::QosPolicy, EntityClass::PowerPolicy, EntityClass::Counters];

    pub fn code(self) -> u16 {
        match self {
            EntityClass::DeviceInfo => 1,
            EntityClass::WifiConfig => 2,
            EntityClass::QosPolicy => 3,
            EntityClass::PowerPolicy => 4,
            EntityClass::Counters => 5,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.code() == code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MibError {
    #[error("entity class {0} not supported")]
    UnknownClass(u16),
    #[error("no instance {1} of entity class {0}")]
    UnknownInstance(u16, u16),
    #[error("instance {1} of entity class {0} already exists")]
    Exists(u16, u16),
}

impl MibError {
    pub fn code(&self) -> u8 {
        match self {
            MibError::UnknownClass(_) => result::UNKNOWN_ENTITY,
            MibError::UnknownInstance(..) => result::UNKNOWN_INSTANCE,
            MibError::Exists(..) => result::INSTANCE_EXISTS,
        }
    }
}

/// Managed entities of one device, keyed by (class, instance).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MibStore {
    pub owner: NodeId,
    entities: BTreeMap<(u16, u16), Vec<u8>>,
}

impl MibStore {
    /// A store holding instance 0 of every class with empty attributes.
    pub fn new(owner: NodeId) -> Self {
        let mut s = MibStore { owner, entities: BTreeMap::new() };
        s.reset();
        s
    }

    pub fn reset(&mut self) {
        self.entities = EntityClass::ALL.iter().map(|c| ((c.code(), 0), Vec::new())).collect();
    }

    pub fn get(&self, class: u16, instance: u16) -> Result<&[u8], MibError> {
        EntityClass::from_code(class).ok_or(MibError::UnknownClass(class))?;
        self.entities.get(&(class, instance)).map(Vec::as_slice).ok_or(MibError::UnknownInstance(class, instance))
    }

    pub fn set(&mut self, class: u16, instance: u16, value: &[u8]) -> Result<(), MibError> {
        EntityClass::from_code(class).ok_or(MibError::UnknownClass(class))?;
        let slot = self.entities.get_mut(&(class, instance)).ok_or(MibError::UnknownInstance(class, instance))?;
        *slot = value.to_vec();
        Ok(())
    }

    pub fn create(&mut self, class: u16, instance: u16, value: &[u8]) -> Result<(), MibError> {
        EntityClass::from_code(class).ok_or(MibError::UnknownClass(class))?;
        if self.entities.contains_key(&(class, instance)) {
            return Err(MibError::Exists(class, instance));
        }
        self.entities.insert((class, instance), value.to_vec());
        Ok(())
    }

    pub fn delete(&mut self, class: u16, instance: u16) -> Result<(), MibError> {
        EntityClass::from_code(class).ok_or(MibError::UnknownClass(class))?;
        self.entities.remove(&(class, instance)).map(|_| ()).ok_or(MibError::UnknownInstance(class, instance))
    }

    pub fn entities(&self) -> impl Iterator<Item = (&(u16, u16), &Vec<u8>)> {
        self.entities.iter()
    }

    /// Execute a request and build its (standard form) response. Content of
    /// a response is the result code, followed by the attribute blob for a
    /// successful Get.
    pub fn apply(&mut self, req: &OmciMessage) -> OmciMessage {
        let h = req.header;
        let (class, inst) = (h.entity_class, h.entity_instance);
        let action = MsgType::from_action(h.msg_type);
        let mut content = Vec::new();
        let outcome = match action {
            Some(MsgType::Create) => self.create(class, inst, &req.content),
            Some(MsgType::Delete) => self.delete(class, inst),
            Some(MsgType::Set) => self.set(class, inst, &req.content),
            Some(MsgType::Get) => self.get(class, inst).map(|v| content.extend_from_slice(v)),
            Some(MsgType::MibReset) => {
                self.reset();
                Ok(())
            }
            None => {
                return response(h, result::NOT_SUPPORTED, Vec::new());
            }
        };
        match outcome {
            Ok(()) => response(h, result::OK, content),
            Err(e) => response(h, e.code(), Vec::new()),
        }
    }
}

pub(crate) fn response(h: OmciHeader, code: u8, data: Vec<u8>) -> OmciMessage {
    let mut content = Vec::with_capacity(1 + data.len());
    content.push(code);
    content.extend(data);
    OmciMessage {
        header: OmciHeader { msg_type: (h.msg_type & 0x1F) | MsgType::AK, ..h },
        content,
        routing: None,
    }
}
