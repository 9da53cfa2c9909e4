# Initial value of every entry of the restorer's learned attribute condition.
RESTORER_ATTRIBUTE_INIT = 0.5
