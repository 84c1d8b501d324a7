"""Pipeline leak detection with regression observers on SCADA telemetry."""

__version__ = "0.1.0"
