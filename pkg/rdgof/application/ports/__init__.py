# Application ports
