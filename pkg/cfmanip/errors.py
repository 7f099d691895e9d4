"""
⚠️ HIÉRARCHIE DES ERREURS DU MOTEUR
Toutes les erreurs levées par cfmanip dérivent de CfmError.
"""


class CfmError(Exception):
    """Erreur de base du moteur"""


class InvalidArgumentError(CfmError, ValueError):
    """Argument hors domaine (quaternion non unitaire, dimension incohérente, ...)"""


class UnsupportedGeometryError(CfmError):
    """Paire de formes sans routine de collision"""

    def __init__(self, kind_a, kind_b):
        super().__init__(f"paire de formes non supportée: {kind_a}-{kind_b}")
        self.pair = (kind_a, kind_b)


class UnsupportedModeError(CfmError):
    """Mode de calcul incompatible avec l'opération demandée"""


class SingularMassMatrixError(CfmError):
    """Matrice de masse non définie positive"""


class NonConvergenceError(CfmError):
    """Plafond d'itérations atteint par le solveur QP"""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class InfeasibleError(CfmError):
    """Problème sans solution admissible"""


class SimulationError(CfmError):
    """Échec d'un stepper pendant une simulation, avec l'indice du pas"""

    def __init__(self, step, cause):
        super().__init__(f"pas {step}: {cause}")
        self.step = step


class ConfigError(CfmError):
    """Configuration invalide (clé inconnue, type incorrect, nom inconnu)"""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
