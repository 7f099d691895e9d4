from .layout import FREE, LINEAR, BodyBlock, SystemLayout
from .se3_math import Pose, integrate_pose, quat_angle, quat_error, softplus
from .collision import ContactPoint, GeometryConfig, SceneBody, SceneSnapshot, Shape, detect_contacts
from .contact_assembly import (ContactSystem, DynamicParams, LinearizedSystem, QuasiDynamicParams,
                               assemble_full_dynamic, assemble_quasi_dynamic, build_contact_system)

__all__ = [
    'FREE', 'LINEAR', 'BodyBlock', 'SystemLayout',
    'Pose', 'integrate_pose', 'quat_angle', 'quat_error', 'softplus',
    'ContactPoint', 'GeometryConfig', 'SceneBody', 'SceneSnapshot', 'Shape', 'detect_contacts',
    'ContactSystem', 'DynamicParams', 'LinearizedSystem', 'QuasiDynamicParams',
    'assemble_full_dynamic', 'assemble_quasi_dynamic', 'build_contact_system'
]
